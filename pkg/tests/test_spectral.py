from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import damped_spin, random_density_matrix
from darksync.errors import DefectiveSpectrumError, InvalidStateError, VerificationError
from darksync.master import evolve
from darksync.model import Lindbladian
from darksync.operators import pauli
from darksync.spectral import (
    DECAYING,
    PURELY_IMAGINARY,
    ZERO,
    DarkStateSet,
    asymptotic_state,
    build_liouvillian,
    classify,
    diagonalize,
    find_dark_states,
    spectral_propagate,
    unvec,
    vec,
    verify_pseudo_density,
)


def lindblad_rhs(lind: Lindbladian, rho: np.ndarray) -> np.ndarray:
    """Direct evaluation of the Lindblad generator, independent of the superoperator."""
    out = -1j * (lind.H @ rho - rho @ lind.H)
    for o in lind.jumps:
        od = o.conj().T
        out += o @ rho @ od - 0.5 * (od @ o @ rho + rho @ od @ o)
    return out


def test_vec_is_column_stacking():
    a = np.arange(4).reshape(2, 2)
    assert list(vec(a)) == [0, 2, 1, 3]
    assert np.array_equal(unvec(vec(a)), a)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_superoperator_matches_direct_evaluation(xxz, seed):
    rho = random_density_matrix(np.random.default_rng(seed), 16)
    M = build_liouvillian(xxz)
    diff = unvec(M @ vec(rho)) - lindblad_rhs(xxz, rho)
    assert np.max(np.abs(diff)) < 1e-12


def test_trace_preservation_left_identity(xxz):
    M = build_liouvillian(xxz)
    assert np.max(np.abs(vec(np.eye(16)).conj() @ M)) < 1e-12


@pytest.mark.parametrize("gamma", [0.3, 1.0, 2.5])
def test_amplitude_damping_spectrum(gamma):
    spec = diagonalize(build_liouvillian(damped_spin(gamma)))
    assert np.allclose(np.sort(spec.eigenvalues.real), [-gamma, -gamma / 2, -gamma / 2, 0], atol=1e-12)
    assert np.allclose(spec.eigenvalues.imag, 0, atol=1e-12)
    assert spec.flags.count(ZERO) == 1
    # the unique steady state is spin down
    zero = spec.right[spec.indices(ZERO)[0]]
    assert np.allclose(zero / np.trace(zero), np.diag([0, 1]), atol=1e-12)
    assert spec.adr == pytest.approx(-gamma / 2)


def test_spectral_propagation_matches_expm():
    lind = Lindbladian(0.7 * pauli("x"), (pauli("minus"),))
    M = build_liouvillian(lind)
    spec = diagonalize(M)
    assert not spec.defective
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    for t in (0.3, 2.0, 7.5):
        ref = unvec(sla.expm(M * t) @ vec(rho0))
        assert np.allclose(spectral_propagate(spec, rho0, t), ref, atol=1e-10)


def test_classify_thresholds():
    assert classify(0.0) == ZERO
    assert classify(3e-9 + 3.6j) == PURELY_IMAGINARY
    assert classify(-1e-6 + 3.6j) == DECAYING


def test_xxz_peripheral_spectrum(xxz_spectrum):
    spec = xxz_spectrum
    pure = spec.distinct(PURELY_IMAGINARY)
    assert len(pure) == 2
    assert sorted(round(z.imag, 9) for z, _ in pure) == [-3.6, 3.6]
    assert all(m == 3 for _, m in pure)
    assert len(spec.indices(ZERO)) == 10
    assert spec.adr.real == pytest.approx(-1.0, abs=1e-9)
    assert abs(spec.adr.imag) == pytest.approx(7.6, abs=1e-9)
    assert not spec.peripheral_defective()
    assert spec.max_residual < 1e-10


def test_spectrum_sorted_and_conjugation_closed(xxz_spectrum):
    lam = xxz_spectrum.eigenvalues
    assert np.all(lam.real <= 1e-8)
    snapped = np.where(np.abs(lam.real) < 1e-8, 0, lam.real)
    assert np.all(np.diff(snapped) <= 1e-9)
    for z in lam:
        assert np.min(np.abs(lam - z.conjugate())) < 1e-6


def test_biorthonormal_peripheral_modes(xxz_spectrum):
    idx = xxz_spectrum.peripheral
    R, Lft = xxz_spectrum.right[idx], xxz_spectrum.left[idx]
    G = np.einsum("aij,bij->ab", Lft.conj(), R)
    assert np.allclose(G, np.eye(len(idx)), atol=1e-8)


def test_xyz_has_no_oscillating_mode(xyz_spectrum):
    assert PURELY_IMAGINARY not in xyz_spectrum.flags
    assert ZERO in xyz_spectrum.flags


def test_asymptotic_state_matches_long_time_evolution(xxz, xxz_spectrum, psi0):
    rho0 = np.outer(psi0, psi0.conj())
    t = 40.0
    ev = evolve(xxz, rho0, t, dt=1e-3, record_stride=1000)
    pred = asymptotic_state(xxz_spectrum, rho0, t)
    # remaining modes decay at least as fast as exp(-t)
    assert np.max(np.abs(pred - ev.final_state)) < 1e-8


def test_full_reconstruction_refused_for_defective_spectrum(xxz_spectrum, psi0):
    assert xxz_spectrum.defective
    with pytest.raises(DefectiveSpectrumError):
        spectral_propagate(xxz_spectrum, np.outer(psi0, psi0.conj()), 1.0)


def test_asymptotic_state_rejects_bad_input(xxz_spectrum):
    with pytest.raises(InvalidStateError):
        asymptotic_state(xxz_spectrum, np.eye(16), 1.0)


def test_dark_states_xxz(xxz):
    dark = find_dark_states(xxz)
    assert len(dark) == 4
    assert dark.predicted_frequencies == pytest.approx((3.6,), abs=1e-6)
    for w, psi in dark:
        for o in xxz.jumps:
            assert np.linalg.norm(o @ psi) < 1e-10
        assert np.linalg.norm(xxz.H @ psi - w * psi) < 1e-10
    report = verify_pseudo_density(build_liouvillian(xxz), dark)
    assert report.ok and report.max_residual < 1e-8
    assert report.sign_convention == "+i(w_l - w_j)"
    assert len(report.checks) == 16


def test_dark_states_xyz_are_degenerate(xyz):
    dark = find_dark_states(xyz)
    assert len(dark) == 3
    assert dark.predicted_frequencies == ()
    assert verify_pseudo_density(build_liouvillian(xyz), dark).sign_convention == "none"


def test_pseudo_density_check_detects_non_dark_state(xxz):
    dark = find_dark_states(xxz)
    up = np.zeros(16, dtype=complex)
    up[0] = 1.0  # all spins up: decays, not dark
    fake = DarkStateSet(np.append(dark.energies, 0.0), np.vstack([dark.states, up]), dark.predicted_frequencies)
    M = build_liouvillian(xxz)
    assert not verify_pseudo_density(M, fake, strict=False).ok
    with pytest.raises(VerificationError):
        verify_pseudo_density(M, fake)
