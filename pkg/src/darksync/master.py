"""Deterministic density-matrix evolution and scalar diagnostics.

The master equation is integrated on vec(rho) with a fixed step.  Because the
Liouvillian is time independent, one classical RK4 step is exactly the
degree-4 Taylor polynomial of ``exp(L dt)``; it is precomputed once so each
step is a single matrix-vector product.  ``method="exact"`` uses
``expm(L dt)`` instead, which serves as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import IntegrationError, ValidationError
from .model import Lindbladian
from .operators import embed, pauli, site_label
from .series import TimeSeries
from .spectral import build_liouvillian, vec
from .states import check_density_matrix

# Integration aborts when trace / Hermiticity / positivity drift past this.
INVARIANT_TOL = 1e-6


def default_observables(n_spins: int) -> dict[str, np.ndarray]:
    sy = pauli("y")
    return {f"sigma_y_{site_label(j)}": embed(sy, j, n_spins) for j in range(1, n_spins + 1)}


def step_propagator(M: np.ndarray, dt: float, method: str = "rk4") -> np.ndarray:
    if method == "rk4":
        A = M * dt
        eye = np.eye(M.shape[0], dtype=complex)
        A2 = A @ A
        return eye + A + A2 / 2 + A2 @ A / 6 + A2 @ A2 / 24
    if method == "exact":
        return sla.expm(M * dt)
    raise ValidationError(f"unknown integration method {method!r}; use 'rk4' or 'exact'")


def loschmidt_echo(rho_t: np.ndarray, rho0: np.ndarray) -> float:
    """Tr[rho(t)^+ rho(0)]; real for Hermitian inputs."""
    rho_t, rho0 = np.asarray(rho_t), np.asarray(rho0)
    if rho_t.shape != rho0.shape:
        raise ValidationError(f"dimension mismatch {rho_t.shape} vs {rho0.shape}")
    return float(np.real(np.vdot(rho_t, rho0)))


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


@dataclass(frozen=True, eq=False)
class Evolution:
    series: dict[str, TimeSeries]
    purity: TimeSeries
    loschmidt: TimeSeries
    final_state: np.ndarray
    dt: float
    method: str
    max_trace_error: float
    min_eigenvalue: float
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.purity.times


def evolve(lind: Lindbladian, rho0: np.ndarray, t_final: float, dt: float = 1e-3,
           observables: dict[str, np.ndarray] | None = None, method: str = "rk4",
           record_stride: int = 1, check_stride: int = 1000, snapshot_times=(),
           liouvillian: np.ndarray | None = None) -> Evolution:
    """Integrate d rho/dt = L rho on a uniform grid from 0 to ``t_final``.

    Records Tr[A rho(t)] for every observable (default: sigma_y on each
    site), the purity and the Loschmidt echo every ``record_stride`` steps.
    Positivity is checked every ``check_stride`` steps and at the end.

    Raises:
        IntegrationError: if trace, Hermiticity or positivity drift by more
            than ``INVARIANT_TOL``; usually a sign that ``dt`` is too large.
    """
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    if not t_final >= 0:
        raise ValidationError(f"t_final must be >= 0, got {t_final}")
    rho0 = check_density_matrix(rho0)
    D = lind.dim
    if rho0.shape != (D, D):
        raise ValidationError(f"rho0 has shape {rho0.shape}, model dimension is {D}")
    n_spins = int(round(np.log2(D)))
    observables = default_observables(n_spins) if observables is None else dict(observables)

    M = build_liouvillian(lind) if liouvillian is None else liouvillian
    P = step_propagator(M, dt, method)
    n_steps = int(round(t_final / dt))
    record_stride = max(1, int(record_stride))
    n_rec = n_steps // record_stride + 1

    names = list(observables)
    # Tr[A rho] = sum_ij A_ji rho_ij = vec(A^T) . vec(rho)
    obs_rows = np.array([vec(np.asarray(observables[k]).T) for k in names]).reshape(len(names), D * D)
    hermitian = [np.allclose(observables[k], np.asarray(observables[k]).conj().T) for k in names]
    values = np.empty((len(names), n_rec), dtype=complex)
    pur = np.empty(n_rec)
    los = np.empty(n_rec)
    snap_steps = {int(round(t / dt)): t for t in snapshot_times}
    snapshots = {}

    v0 = vec(rho0).astype(complex)
    v = v0.copy()
    max_trace_err = 0.0
    min_eig = float(np.linalg.eigvalsh(rho0).min())
    r = 0
    for step in range(n_steps + 1):
        if step % record_stride == 0:
            values[:, r] = obs_rows @ v
            pur[r] = np.real(np.vdot(v, v))
            los[r] = np.real(np.vdot(v, v0))
            r += 1
        if step in snap_steps:
            snapshots[snap_steps[step]] = v.reshape(D, D, order="F").copy()
        if step == n_steps:
            break
        v = P @ v
        rho = v.reshape(D, D, order="F")
        herm_err = np.max(np.abs(rho - rho.conj().T))
        rho = (rho + rho.conj().T) / 2
        v = rho.reshape(-1, order="F")
        tr_err = abs(np.trace(rho) - 1)
        max_trace_err = max(max_trace_err, tr_err)
        if tr_err > INVARIANT_TOL or herm_err > INVARIANT_TOL:
            raise IntegrationError(
                f"master-evolver: invariant breached at t={(step + 1) * dt:.6g} "
                f"(trace error {tr_err:.3g}, Hermiticity error {herm_err:.3g}, tol {INVARIANT_TOL:g}); reduce dt")
        if (step + 1) % check_stride == 0 or step + 1 == n_steps:
            lo = float(np.linalg.eigvalsh(rho).min())
            min_eig = min(min_eig, lo)
            if lo < -INVARIANT_TOL:
                raise IntegrationError(
                    f"master-evolver: positivity breached at t={(step + 1) * dt:.6g} "
                    f"(min eigenvalue {lo:.3g}, tol {INVARIANT_TOL:g}); reduce dt")

    times = np.arange(n_rec) * record_stride * dt
    series = {
        k: TimeSeries(times, values[i].real if hermitian[i] else values[i], k) for i, k in enumerate(names)
    }
    return Evolution(
        series=series,
        purity=TimeSeries(times, pur, "purity"),
        loschmidt=TimeSeries(times, los, "loschmidt"),
        final_state=v.reshape(D, D, order="F").copy(),
        dt=dt,
        method=method,
        max_trace_error=float(max_trace_err),
        min_eigenvalue=min_eig,
        snapshots=snapshots,
    )
