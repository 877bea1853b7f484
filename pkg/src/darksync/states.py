"""Initial states and state-validity checks.

A product state is described by one Bloch-sphere direction ``(theta, phi)`` per
site, ``cos(theta/2)|up> + exp(i phi) sin(theta/2)|down>``; ``theta = 0`` is
spin up.

The default initial state, ``tilted_pairs``, tilts every spin by 3*pi/4 from
up (45 degrees above the south pole) and sets the azimuths so that the
next-nearest-neighbour partners (1,3) and (2,4) point in opposite directions
in the xy-plane, with pair (2,4) rotated by -2*pi/3 relative to pair (1,3).
Opposite partner azimuths suppress the bright triplet component of each
dissipated pair, so most of the weight starts in the dark sector.  The
(A,B) synchronization phase at long times is set by the azimuth offset
between the two pairs.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidStateError, ValidationError
from .operators import EPS_STATE, kron_all, n_spins_for_dim

TILT = 3 * np.pi / 4
PAIR_AZIMUTHS = (0.0, -2 * np.pi / 3, np.pi, np.pi / 3)
DEFAULT_STATE = "tilted_pairs"


def spin_state(theta: float, phi: float) -> np.ndarray:
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=complex)


def product_state(angles) -> np.ndarray:
    """State vector for a list of per-site ``(theta, phi)`` pairs."""
    angles = [tuple(float(x) for x in a) for a in angles]
    if not angles:
        raise ValidationError("product state needs at least one site")
    for a in angles:
        if len(a) != 2:
            raise ValidationError(f"each site needs (theta, phi), got {a}")
    return kron_all(spin_state(t, p) for t, p in angles)


def named_state_angles(name: str, n_spins: int) -> list[tuple[float, float]]:
    if name == "tilted_pairs":
        return [(TILT, PAIR_AZIMUTHS[j % 4]) for j in range(n_spins)]
    if name == "plus_x":
        return [(np.pi / 2, 0.0)] * n_spins
    if name == "all_up":
        return [(0.0, 0.0)] * n_spins
    if name == "all_down":
        return [(np.pi, 0.0)] * n_spins
    if name == "neel_z":
        return [(0.0 if j % 2 == 0 else np.pi, 0.0) for j in range(n_spins)]
    raise ValidationError(f"unknown named state {name!r}")


NAMED_STATES = ("tilted_pairs", "plus_x", "all_up", "all_down", "neel_z")


def default_initial_state(n_spins: int = 4) -> np.ndarray:
    return product_state(named_state_angles(DEFAULT_STATE, n_spins))


def resolve_initial_state(descriptor: dict | None, n_spins: int) -> tuple[np.ndarray | None, np.ndarray]:
    """Turn a config descriptor into ``(psi or None, rho)``.

    Accepted forms::

        {"kind": "named", "name": "tilted_pairs"}
        {"kind": "product", "angles": [[theta, phi], ...]}
        {"kind": "density_matrix", "real": [[...]], "imag": [[...]]}

    ``psi`` is None for a density-matrix descriptor; trajectory commands need
    a pure initial state.
    """
    descriptor = descriptor or {"kind": "named", "name": DEFAULT_STATE}
    kind = descriptor.get("kind")
    if kind == "named":
        psi = product_state(named_state_angles(descriptor.get("name", DEFAULT_STATE), n_spins))
    elif kind == "product":
        angles = descriptor.get("angles", [])
        if len(angles) != n_spins:
            raise ValidationError(f"initial_state.angles: expected {n_spins} sites, got {len(angles)}")
        psi = product_state(angles)
    elif kind == "density_matrix":
        re = np.asarray(descriptor.get("real"), dtype=float)
        im = np.asarray(descriptor.get("imag", np.zeros_like(re)), dtype=float)
        rho = re + 1j * im
        if rho.shape != (2**n_spins, 2**n_spins):
            raise ValidationError(f"initial_state: density matrix must be {2**n_spins}x{2**n_spins}, got {rho.shape}")
        check_density_matrix(rho)
        return None, rho
    else:
        raise ValidationError(f"initial_state.kind: unknown kind {kind!r}")
    return psi, np.outer(psi, psi.conj())


def check_state_vector(psi: np.ndarray, tol: float = EPS_STATE) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise InvalidStateError(f"state vector must be 1-D, got shape {psi.shape}")
    n_spins_for_dim(psi.shape[0])
    if abs(np.linalg.norm(psi) - 1) > tol:
        raise InvalidStateError(f"state vector norm {np.linalg.norm(psi):.12g} differs from 1 by more than {tol}")
    return psi


def check_density_matrix(rho: np.ndarray, tol: float = EPS_STATE) -> np.ndarray:
    """Return ``rho`` if Hermitian, unit trace and positive semidefinite within ``tol``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > tol:
        raise InvalidStateError(f"density matrix not Hermitian (deviation {herm:.3g} > {tol})")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise InvalidStateError(f"density matrix trace {tr:.12g} != 1 within {tol}")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if lo < -tol:
        raise InvalidStateError(f"density matrix has negative eigenvalue {lo:.3g}")
    return rho


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim
