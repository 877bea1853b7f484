"""Liouvillian superoperator, its eigendecomposition, and dark-state analysis.

Vectorization is column stacking, ``vec(rho)[i + D*j] = rho[i, j]``, so that
``vec(A X B) = (B^T kron A) vec(X)``.  With that convention::

    L = -i (I kron H - H^T kron I)
        + sum_k [ conj(O_k) kron O_k - 1/2 I kron O_k^+ O_k - 1/2 (O_k^+ O_k)^T kron I ]

Lindbladian spectra are typically highly degenerate and some decaying
clusters are defective (Jordan blocks).  ``diagonalize`` therefore works per
eigenvalue cluster: degenerate clusters get an orthonormal kernel basis from
one SVD of ``M - lambda I`` (right and left kernels together), and clusters
whose kernel is too small, or whose left/right Gram matrix is
ill-conditioned, are marked defective instead of being silently used.
Peripheral eigenvalues (zero real part) of a Lindbladian are always
semisimple, so the asymptotic reconstruction only needs the peripheral
clusters to be clean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DefectiveSpectrumError, ValidationError, VerificationError
from .model import Lindbladian
from .operators import EPS_SPEC
from .states import check_density_matrix

ZERO = "zero"
PURELY_IMAGINARY = "purely_imaginary"
DECAYING = "decaying"

COND_LIMIT = 1e8
CLUSTER_TOL = 1e-6


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = math.isqrt(v.shape[0])
    if d * d != v.shape[0]:
        raise ValidationError(f"vector of length {v.shape[0]} is not a vectorized square matrix")
    return np.asarray(v).reshape(d, d, order="F")


def build_liouvillian(lind: Lindbladian) -> np.ndarray:
    """Dense ``D^2 x D^2`` Liouvillian for column-stacked density matrices."""
    H = lind.H
    D = H.shape[0]
    eye = np.eye(D, dtype=complex)
    M = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for O in lind.jumps:
        if O.shape != H.shape:
            raise ValidationError(f"jump operator shape {O.shape} does not match H {H.shape}")
        OdO = O.conj().T @ O
        M += np.kron(O.conj(), O) - 0.5 * np.kron(eye, OdO) - 0.5 * np.kron(OdO.T, eye)
    return M


def classify(lam: complex, eps: float = EPS_SPEC) -> str:
    if abs(lam.real) < eps:
        return ZERO if abs(lam.imag) < eps else PURELY_IMAGINARY
    return DECAYING


@dataclass(frozen=True)
class EigenCluster:
    indices: tuple[int, ...]  # positions in the sorted spectrum
    center: complex
    defective: bool
    condition: float

    @property
    def multiplicity(self) -> int:
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sorted eigenvalues with biorthonormal right/left eigenmatrices.

    ``left[i]`` and ``right[j]`` satisfy ``Tr[left[i]^+ right[j]] = delta_ij``
    within every non-defective cluster.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    flags: tuple[str, ...]
    adr: complex | None
    clusters: tuple[EigenCluster, ...]
    condition: float
    max_residual: float
    eps: float = EPS_SPEC
    warnings: tuple[str, ...] = field(default=())

    @property
    def defective(self) -> bool:
        return any(c.defective for c in self.clusters)

    @property
    def peripheral(self) -> np.ndarray:
        return np.array([i for i, f in enumerate(self.flags) if f != DECAYING], dtype=int)

    def indices(self, flag: str) -> np.ndarray:
        return np.array([i for i, f in enumerate(self.flags) if f == flag], dtype=int)

    def distinct(self, flag: str, tol: float = CLUSTER_TOL) -> list[tuple[complex, int]]:
        """Distinct eigenvalues carrying ``flag`` as ``(value, multiplicity)``."""
        out = []
        for c in self.clusters:
            if self.flags[c.indices[0]] == flag:
                out.append((complex(c.center), c.multiplicity))
        out.sort(key=lambda x: (-x[0].imag, -x[0].real))
        return out

    def peripheral_defective(self) -> bool:
        per = set(self.peripheral.tolist())
        return any(c.defective for c in self.clusters if per.intersection(c.indices))


def _clusters(w: np.ndarray, tol: float) -> list[np.ndarray]:
    dist = np.abs(w[:, None] - w[None, :])
    scale = np.maximum(1.0, np.abs(w))[:, None]
    adj = csr_matrix(dist < tol * scale)
    n, labels = connected_components(adj, directed=False)
    return [np.flatnonzero(labels == k) for k in range(n)]


def _tidy_zero_basis(R: np.ndarray) -> np.ndarray:
    """Rotate a zero-eigenvalue basis so only its first element carries trace.

    The first element is then trace-normalized; the others are traceless
    with unit Frobenius norm.
    """
    tr = np.array([np.trace(unvec(R[:, a])) for a in range(R.shape[1])])
    nt = np.linalg.norm(tr)
    if nt < 1e-6:
        return R
    u = tr.conj() / nt
    Q, _ = np.linalg.qr(np.column_stack([u, np.eye(len(u))]))
    Q = Q[:, : len(u)]
    Q[:, 0] = u  # QR may flip the sign of the first column
    R = R @ Q
    R[:, 0] = R[:, 0] / np.trace(unvec(R[:, 0]))
    for a in range(1, R.shape[1]):
        R[:, a] /= np.linalg.norm(R[:, a])
    return R


def diagonalize(M: np.ndarray, eps: float = EPS_SPEC, cluster_tol: float = CLUSTER_TOL,
                cond_limit: float = COND_LIMIT) -> Spectrum:
    """Full right/left eigendecomposition of a Liouvillian matrix.

    Sorted by descending real part (values within ``eps`` of the imaginary
    axis count as zero), ties broken by descending imaginary part.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    try:
        w, vl, vr = sla.eig(M, left=True, right=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise DefectiveSpectrumError(f"eigensolver failed to converge: {exc}") from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(vr))):
        raise DefectiveSpectrumError("eigensolver returned non-finite values")

    lam = w.astype(complex).copy()
    V = vr.astype(complex).copy()
    W = vl.astype(complex).copy()
    norm2 = max(1.0, float(np.linalg.norm(M, 2)))
    null_tol = 1e-7 * norm2
    raw_clusters = []

    for idx in _clusters(w, cluster_tol):
        m = len(idx)
        center = complex(np.mean(w[idx]))
        semisimple = False
        if m > 1:
            U, S, Vh = np.linalg.svd(M - center * np.eye(n))
            if np.count_nonzero(S < null_tol) >= m:
                V[:, idx] = Vh[-m:].conj().T
                W[:, idx] = U[:, -m:]
                lam[idx] = center
                semisimple = True
        if m == 1 or not semisimple:
            V[:, idx] /= np.linalg.norm(V[:, idx], axis=0)
            W[:, idx] /= np.linalg.norm(W[:, idx], axis=0)

        R = V[:, idx]
        if classify(center, eps) == ZERO:
            R = _tidy_zero_basis(R)
        else:
            R = R / np.linalg.norm(R, axis=0)
        V[:, idx] = R

        Wc = W[:, idx]
        if semisimple or m == 1:
            G = Wc.conj().T @ R  # Gram matrix; identity after biorthonormalization
            gn = G / (np.linalg.norm(Wc, axis=0)[:, None] * np.linalg.norm(R, axis=0)[None, :])
            cond = float(np.linalg.cond(gn)) if m > 1 else 1.0 / max(abs(gn[0, 0]), 1e-300)
            defective = not np.isfinite(cond) or cond > cond_limit
            if not defective:
                W[:, idx] = Wc @ np.linalg.inv(G).conj().T
        else:
            # kernel smaller than the algebraic multiplicity: a Jordan block
            cond = math.inf
            defective = True
            for a in idx:
                g = np.vdot(W[:, a], V[:, a])
                if abs(g) > 1e-300:
                    W[:, a] /= np.conj(g)
        raw_clusters.append((idx, center, defective, cond))

    re_key = np.where(np.abs(lam.real) < eps, 0.0, lam.real)
    order = np.lexsort((-lam.imag, -re_key))
    position = np.empty(n, dtype=int)
    position[order] = np.arange(n)

    lam = lam[order]
    V = V[:, order]
    W = W[:, order]
    flags = tuple(classify(z, eps) for z in lam)
    clusters = tuple(
        sorted(
            (EigenCluster(tuple(sorted(int(position[i]) for i in idx)), center, defective, cond)
             for idx, center, defective, cond in raw_clusters),
            key=lambda c: c.indices[0],
        )
    )

    Vn = V / np.linalg.norm(V, axis=0)
    condition = float(np.linalg.cond(Vn))
    residual = float(np.max(np.linalg.norm(M @ Vn - Vn * lam[None, :], axis=0)))

    decaying = [z for z, f in zip(lam, flags) if f == DECAYING]
    adr = complex(decaying[0]) if decaying else None

    warnings = []
    if np.max(lam.real) > eps:
        warnings.append(f"eigenvalue with positive real part {np.max(lam.real):.3g}")
    conj_gap = max(float(np.min(np.abs(lam - np.conj(z)))) for z in lam)
    if conj_gap > max(eps, cluster_tol):
        warnings.append(f"spectrum not closed under conjugation (gap {conj_gap:.3g})")
    n_def = sum(c.defective for c in clusters)
    if n_def:
        warnings.append(f"{n_def} defective or ill-conditioned eigenvalue cluster(s); "
                        f"eigenvector matrix condition number {condition:.3g}")

    D = math.isqrt(n)
    return Spectrum(
        eigenvalues=lam,
        right=np.stack([unvec(V[:, j]) for j in range(n)]).reshape(n, D, D),
        left=np.stack([unvec(W[:, j]) for j in range(n)]).reshape(n, D, D),
        flags=flags,
        adr=adr,
        clusters=clusters,
        condition=condition,
        max_residual=residual,
        eps=eps,
        warnings=tuple(warnings),
    )


def coefficients(spectrum: Spectrum, rho: np.ndarray, indices=None) -> np.ndarray:
    """Expansion coefficients ``c_j = Tr[left_j^+ rho]``."""
    left = spectrum.left if indices is None else spectrum.left[indices]
    return np.einsum("kij,ij->k", left.conj(), np.asarray(rho, dtype=complex))


def asymptotic_state(spectrum: Spectrum, rho0: np.ndarray, t: float) -> np.ndarray:
    """Non-decaying part of ``exp(L t) rho0``: the zero and purely imaginary modes."""
    check_density_matrix(rho0)
    if spectrum.peripheral_defective():
        raise DefectiveSpectrumError(
            "peripheral eigenvalue cluster is defective or ill-conditioned "
            f"(condition > {COND_LIMIT:g}); integrate the master equation directly instead")
    idx = spectrum.peripheral
    c = coefficients(spectrum, rho0, idx)
    phases = np.exp(spectrum.eigenvalues[idx] * t)
    return np.einsum("k,kij->ij", c * phases, spectrum.right[idx])


def spectral_propagate(spectrum: Spectrum, rho0: np.ndarray, t: float) -> np.ndarray:
    """Full spectral sum ``sum_j c_j exp(lambda_j t) rho_j``; needs a non-defective spectrum."""
    if spectrum.defective:
        raise DefectiveSpectrumError("spectrum is defective; the eigenbasis is not complete")
    c = coefficients(spectrum, rho0)
    return np.einsum("k,kij->ij", c * np.exp(spectrum.eigenvalues * t), spectrum.right)


@dataclass(frozen=True, eq=False)
class DarkStateSet:
    energies: np.ndarray
    states: np.ndarray  # (n_dark, D); row k is the state with energy energies[k]
    predicted_frequencies: tuple[float, ...]  # distinct angular gaps |w_l - w_j|

    def __len__(self) -> int:
        return len(self.energies)

    def __iter__(self):
        return iter(zip(self.energies, self.states))


def find_dark_states(lind: Lindbladian, rank_tol: float = 1e-10, residual_tol: float = 1e-8,
                     eps: float = EPS_SPEC) -> DarkStateSet:
    """Hamiltonian eigenstates annihilated by every jump operator.

    The joint kernel of the jumps comes from an SVD of the stacked jump
    matrix; H is projected into that kernel and diagonalized there, and only
    kernel vectors that are genuine H-eigenstates are kept.
    """
    H = lind.H
    D = lind.dim
    if lind.jumps:
        A = np.vstack(lind.jumps)
        _, S, Vh = np.linalg.svd(A)
        rank = int(np.count_nonzero(S > rank_tol * max(1.0, S[0])))
        K = Vh[rank:].conj().T
    else:
        K = np.eye(D, dtype=complex)
    if K.shape[1] == 0:
        return DarkStateSet(np.zeros(0), np.zeros((0, D), dtype=complex), ())

    Hk = K.conj().T @ H @ K
    omega, u = np.linalg.eigh((Hk + Hk.conj().T) / 2)
    psi = (K @ u).T
    keep = []
    for k in range(len(omega)):
        r = np.linalg.norm(H @ psi[k] - omega[k] * psi[k])
        dark = max((np.linalg.norm(O @ psi[k]) for O in lind.jumps), default=0.0)
        if r < residual_tol and dark < residual_tol:
            keep.append(k)
    omega = omega[keep]
    psi = psi[keep]

    gaps = []
    for j in range(len(omega)):
        for l in range(j + 1, len(omega)):
            g = abs(omega[l] - omega[j])
            if g > eps and all(abs(g - x) > 1e-9 for x in gaps):
                gaps.append(float(g))
    return DarkStateSet(omega, psi, tuple(sorted(gaps)))


@dataclass(frozen=True)
class PairCheck:
    j: int
    l: int
    theta: float  # observed: L |psi_j><psi_l| = i theta |psi_j><psi_l|
    gap: float  # w_l - w_j
    real_part: float
    residual: float
    ok: bool


@dataclass(frozen=True)
class PseudoDensityReport:
    checks: tuple[PairCheck, ...]
    sign_convention: str
    tol: float

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)

    @property
    def failures(self) -> list[PairCheck]:
        return [c for c in self.checks if not c.ok]


def verify_pseudo_density(M: np.ndarray, dark: DarkStateSet, tol: float = 1e-8,
                          strict: bool = True) -> PseudoDensityReport:
    """Check every outer product of dark states is a purely imaginary eigenmatrix.

    For each ordered pair (j, l) the observed eigenvalue ``i*theta`` must be
    purely imaginary with ``|theta| = |w_l - w_j|``.  The sign actually
    observed is reported as ``+i(w_l - w_j)``, ``-i(w_l - w_j)``, or ``none``
    when every gap vanishes.
    """
    if len(dark) == 0:
        raise ValidationError("verify_pseudo_density needs at least one dark state")
    checks = []
    signs = set()
    for j, (wj, pj) in enumerate(dark):
        for l, (wl, pl) in enumerate(dark):
            x = vec(np.outer(pj, pl.conj()))
            y = M @ x
            mu = np.vdot(x, y) / np.vdot(x, x)
            residual = float(np.linalg.norm(y - mu * x))
            theta = float(mu.imag)
            gap = float(wl - wj)
            ok = residual < tol and abs(mu.real) < tol and abs(abs(theta) - abs(gap)) < tol
            if abs(gap) > tol:
                signs.add("+" if abs(theta - gap) < tol else "-" if abs(theta + gap) < tol else "?")
            checks.append(PairCheck(j, l, theta, gap, float(mu.real), residual, ok))
    if not signs:
        convention = "none"
    elif signs == {"+"}:
        convention = "+i(w_l - w_j)"
    elif signs == {"-"}:
        convention = "-i(w_l - w_j)"
    else:
        convention = "mixed"
    report = PseudoDensityReport(tuple(checks), convention, tol)
    if strict and not report.ok:
        bad = ", ".join(f"({c.j},{c.l}) residual={c.residual:.3g} theta={c.theta:.9g} gap={c.gap:.9g}"
                        for c in report.failures)
        raise VerificationError(f"pseudo-density check failed for pairs {bad}")
    return report
