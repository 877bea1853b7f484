"""Dense spin-1/2 operator kernel.

Basis convention (frozen, every other module relies on it): the computational
z-basis with index 0 = spin up (sigma_z = +1), and site 1 as the most
significant bit, i.e. the leftmost Kronecker factor.  A four-spin basis index
``b3 b2 b1 b0`` therefore lists sites 1..4 from left to right, with bit value 0
meaning up.

Matrices and vectors are plain ``numpy`` complex arrays; the helpers below add
shape checking and the tolerance-aware predicates the rest of the package uses.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .errors import InvalidStateError, ValidationError

# Numerical predicates. Single source of truth for tolerances.
EPS_HERM = 1e-10
EPS_SPEC = 1e-8
EPS_STATE = 1e-8
EPS_NORM = 1e-10

IDENTITY2 = np.eye(2, dtype=complex)

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PAULI["plus"] = (_PAULI["x"] + 1j * _PAULI["y"]) / 2
_PAULI["minus"] = (_PAULI["x"] - 1j * _PAULI["y"]) / 2
for _m in _PAULI.values():
    _m.setflags(write=False)

SPIN_UP = np.array([1, 0], dtype=complex)
SPIN_DOWN = np.array([0, 1], dtype=complex)


def pauli(axis: str) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``axis`` in {x, y, z, plus, minus}.

    ``minus`` is the lowering operator (sigma_x - i sigma_y)/2, mapping
    spin up to spin down.
    """
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValidationError(f"unknown Pauli axis {axis!r}; expected one of {sorted(_PAULI)}") from None


def kron_all(factors) -> np.ndarray:
    """Kronecker product of ``factors`` taken left to right."""
    factors = list(factors)
    if not factors:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, factors)


def embed(op: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    """Place a single-site operator at ``site`` (1-based) in an n-spin register.

    Returns ``I x ... x op x ... x I`` of dimension ``2**n_spins`` with site 1
    as the leftmost factor.
    """
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValidationError(f"embed expects a 2x2 operator, got shape {op.shape}")
    if n_spins < 1:
        raise ValidationError(f"n_spins must be >= 1, got {n_spins}")
    if not 1 <= site <= n_spins:
        raise ValidationError(f"site {site} out of range 1..{n_spins}")
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (n_spins - site), dtype=complex)
    return np.kron(np.kron(left, op), right)


def _check_square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    return a


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    _check_same_shape(a, b)
    return a + b


def scale(a: np.ndarray, c: complex) -> np.ndarray:
    return c * np.asarray(a)


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    if a.ndim != 2 or b.ndim < 1 or a.shape[1] != b.shape[0]:
        raise ValidationError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def trace(a: np.ndarray) -> complex:
    return complex(np.trace(_check_square(a)))


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return multiply(a, b) - multiply(b, a)


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return multiply(a, b) + multiply(b, a)


def apply(a: np.ndarray, psi: np.ndarray) -> np.ndarray:
    a, psi = _check_square(a, "operator"), np.asarray(psi)
    if psi.ndim != 1 or psi.shape[0] != a.shape[1]:
        raise ValidationError(f"operator of shape {a.shape} cannot act on vector of shape {psi.shape}")
    return a @ psi


def expectation(psi: np.ndarray, a: np.ndarray) -> complex:
    """<psi|A|psi> for a (not necessarily normalized) state vector."""
    return complex(np.vdot(psi, apply(a, psi)))


def is_hermitian(a: np.ndarray, tol: float = EPS_HERM) -> bool:
    a = _check_square(a)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) < tol)


def is_unitary(a: np.ndarray, tol: float = EPS_HERM) -> bool:
    a = _check_square(a)
    return bool(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0])), initial=0.0) < tol)


def normalize(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if nrm < 1e-300:
        raise InvalidStateError("cannot normalize the zero vector")
    return psi / nrm


def n_spins_for_dim(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if dim < 2 or 2**n != dim:
        raise ValidationError(f"dimension {dim} is not a power of two")
    return n


def site_label(site: int) -> str:
    """Sites 1,2,3,... are labelled A,B,C,... in reports."""
    return chr(ord("A") + site - 1) if site <= 26 else str(site)
