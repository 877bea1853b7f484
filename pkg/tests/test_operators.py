from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darksync.errors import InvalidStateError, ValidationError
from darksync.operators import (
    SPIN_DOWN,
    SPIN_UP,
    anticommutator,
    commutator,
    embed,
    expectation,
    is_hermitian,
    is_unitary,
    kron_all,
    n_spins_for_dim,
    normalize,
    pauli,
    site_label,
    trace,
)

X, Y, Z = pauli("x"), pauli("y"), pauli("z")


def test_pauli_algebra():
    eye = np.eye(2)
    for s in (X, Y, Z):
        assert np.allclose(s @ s, eye)
        assert is_hermitian(s)
    assert np.allclose(commutator(X, Y), 2j * Z)
    assert np.allclose(commutator(Y, Z), 2j * X)
    assert np.allclose(anticommutator(X, Y), 0)


def test_ladder_operators_act_on_z_basis():
    sp, sm = pauli("plus"), pauli("minus")
    assert np.allclose(sm @ SPIN_UP, SPIN_DOWN)
    assert np.allclose(sp @ SPIN_DOWN, SPIN_UP)
    assert np.allclose(sm @ SPIN_DOWN, 0)
    assert np.allclose(sp @ sm, (np.eye(2) + Z) / 2)
    assert np.allclose(sp.conj().T, sm)


def test_unknown_axis():
    with pytest.raises(ValidationError):
        pauli("w")


def test_site_one_is_leftmost_factor():
    zz = embed(Z, 1, 3)
    assert np.allclose(zz, np.kron(Z, np.eye(4)))
    # |down, up, up> lives at index 4 in the z basis
    psi = kron_all([SPIN_DOWN, SPIN_UP, SPIN_UP])
    assert np.argmax(np.abs(psi)) == 4
    assert expectation(psi, embed(Z, 1, 3)).real == pytest.approx(-1)
    assert expectation(psi, embed(Z, 2, 3)).real == pytest.approx(1)


@pytest.mark.parametrize("site", [0, 5])
def test_embed_rejects_bad_site(site):
    with pytest.raises(ValidationError):
        embed(X, site, 4)


def test_embed_rejects_non_single_site_operator():
    with pytest.raises(ValidationError):
        embed(np.eye(4), 1, 4)


@given(st.integers(1, 4), st.integers(1, 4))
def test_operators_on_different_sites_commute(j, l):
    a, b = embed(X, j, 4), embed(Y, l, 4)
    c = commutator(a, b)
    if j == l:
        assert np.allclose(c, 2j * embed(Z, j, 4))
    else:
        assert np.allclose(c, 0)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_random_hermitian_expectation_is_real(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    h = a + a.conj().T
    psi = normalize(rng.standard_normal(8) + 1j * rng.standard_normal(8))
    assert abs(expectation(psi, h).imag) < 1e-12
    w, v = np.linalg.eigh(h)
    assert is_unitary(v)
    assert trace(h).real == pytest.approx(w.sum())


def test_normalize_rejects_zero_vector():
    with pytest.raises(InvalidStateError):
        normalize(np.zeros(4))


def test_dimension_helpers():
    assert n_spins_for_dim(16) == 4
    with pytest.raises(ValidationError):
        n_spins_for_dim(12)
    assert [site_label(j) for j in (1, 2, 3, 4)] == ["A", "B", "C", "D"]
