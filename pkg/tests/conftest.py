from __future__ import annotations

import numpy as np
import pytest

from darksync.model import Lindbladian, build_lindbladian, preset
from darksync.operators import pauli
from darksync.spectral import build_liouvillian, diagonalize
from darksync.states import default_initial_state


@pytest.fixture(scope="session")
def xxz():
    return build_lindbladian(preset("xxz"))


@pytest.fixture(scope="session")
def xyz():
    return build_lindbladian(preset("xyz"))


@pytest.fixture(scope="session")
def xxz_spectrum(xxz):
    return diagonalize(build_liouvillian(xxz))


@pytest.fixture(scope="session")
def xyz_spectrum(xyz):
    return diagonalize(build_liouvillian(xyz))


@pytest.fixture(scope="session")
def psi0():
    return default_initial_state(4)


def damped_spin(gamma: float = 1.0) -> Lindbladian:
    """One spin with H = 0 and jump sqrt(gamma) s^-."""
    return Lindbladian(np.zeros((2, 2)), (np.sqrt(gamma) * pauli("minus"),))


def random_density_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


# Acceptance results, filled in by test_acceptance.py and echoed in the terminal summary.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
