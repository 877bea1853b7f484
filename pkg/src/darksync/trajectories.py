"""Diffusive quantum trajectories (quantum state diffusion, homodyne form).

Each step integrates::

    d psi = [-i H_eff + sum_k (s_k/2) O_k - s_k^2/8] psi dt + sum_k (O_k - s_k/2) psi dW_k

with ``H_eff = H - (i/2) sum_k O_k^+ O_k`` and ``s_k = <psi|O_k + O_k^+|psi>``,
then renormalizes the state.

Two schemes are available:

``split`` (default)
    Lie splitting: the Hamiltonian part is applied exactly with
    ``exp(-i H dt)``, the dissipative and stochastic parts with one
    Euler-Maruyama step.  Plain Euler-Maruyama inflates components with large
    ``|E|`` by ``|1 - i E dt|`` per step, which biases the relative weight of
    non-degenerate dark states at ``dt = 1e-3`` by many standard errors over
    ``t ~ 20``.
``euler``
    Plain Euler-Maruyama on the full drift.

Noise: every trajectory owns a PCG64 generator seeded from a
``numpy.random.SeedSequence``; trajectory ``i`` of an ensemble with master
seed ``m`` uses ``SeedSequence(m, spawn_key=(i,))``.  Increments are
``sqrt(dt) * standard_normal`` (numpy's ziggurat sampler), drawn in steps x
channels order.  Draws are chunked, and the chunking does not change the
stream.  Ensembles are split into fixed-size blocks by trajectory index, so
results do not depend on the number of worker processes.  A different
``block_size`` changes the batched BLAS calls and hence the last few bits.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import IntegrationError, ValidationError
from .master import default_observables
from .model import Lindbladian
from .operators import embed, pauli
from .series import TimeSeries
from .states import check_state_vector

SCHEMES = ("split", "euler")
NORM_COLLAPSE = 1e-6
BLOCK_SIZE = 128
_CHUNK = 2048


def trajectory_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))


def _seed_label(seed) -> str:
    if isinstance(seed, np.random.SeedSequence):
        key = "/".join(str(k) for k in seed.spawn_key)
        return f"{seed.entropy}/{key}" if key else str(seed.entropy)
    return str(seed)


class NoiseStream:
    """Reproducible Wiener increments, shape ``(n_steps, n_channels)``, variance ``dt``."""

    def __init__(self, seed, n_channels: int, dt: float):
        if not isinstance(seed, np.random.SeedSequence):
            seed = np.random.SeedSequence(int(seed))
        if not dt > 0:
            raise ValidationError(f"dt must be > 0, got {dt}")
        self.seed = seed
        self.n_channels = int(n_channels)
        self.dt = float(dt)
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self._scale = np.sqrt(self.dt)

    def draw(self, n_steps: int) -> np.ndarray:
        return self._scale * self._gen.standard_normal((int(n_steps), self.n_channels))

    @property
    def label(self) -> str:
        return _seed_label(self.seed)


class _Kernel:
    """Precomputed matrices for one (Lindbladian, dt, scheme) combination."""

    def __init__(self, lind: Lindbladian, dt: float, scheme: str):
        if scheme not in SCHEMES:
            raise ValidationError(f"unknown SSE scheme {scheme!r}; expected one of {SCHEMES}")
        if not dt > 0:
            raise ValidationError(f"dt must be > 0, got {dt}")
        D, K = lind.dim, lind.n_jumps
        decay = -0.5 * sum((O.conj().T @ O for O in lind.jumps), np.zeros((D, D), dtype=complex))
        if scheme == "split":
            self.unitary_T = sla.expm(-1j * lind.H * dt).T
            G = decay
        else:
            self.unitary_T = None
            G = -1j * lind.H + decay
        blocks = [G, *lind.jumps]
        self.right = np.concatenate(blocks, axis=0).T.copy()  # psi @ right -> [G psi | O_1 psi | ...]
        self.D, self.K, self.dt, self.scheme = D, K, float(dt), scheme

    def step(self, psi: np.ndarray, dW: np.ndarray):
        """Advance a batch ``psi`` of shape (B, D) with increments ``dW`` of shape (B, K)."""
        D, K, dt = self.D, self.K, self.dt
        if self.unitary_T is not None:
            psi = psi @ self.unitary_T
        X = psi @ self.right
        new = psi + dt * X[:, :D]
        if K:
            Opsi = X[:, D:].reshape(-1, K, D)
            s = 2.0 * np.einsum("bd,bkd->bk", psi.conj(), Opsi).real
            new += np.einsum("bk,bkd->bd", 0.5 * dt * s + dW, Opsi)
            new -= psi * np.sum(dt * s * s / 8 + 0.5 * s * dW, axis=1)[:, None]
        norms = np.linalg.norm(new, axis=1)
        bad = np.flatnonzero(norms < NORM_COLLAPSE)
        if bad.size:
            raise _Collapse(bad, float(norms[bad].min()))
        return new / norms[:, None], norms


class _Collapse(Exception):
    def __init__(self, rows, norm):
        self.rows, self.norm = rows, norm


def sse_step(psi: np.ndarray, lind: Lindbladian, dt: float, dW, scheme: str = "split") -> np.ndarray:
    """One normalized SSE step for a single state; ``dW`` has one entry per jump."""
    psi = check_state_vector(psi)
    dW = np.atleast_1d(np.asarray(dW, dtype=float))
    if dW.shape != (lind.n_jumps,):
        raise ValidationError(f"need {lind.n_jumps} increments, got shape {dW.shape}")
    kernel = _Kernel(lind, dt, scheme)
    try:
        out, _ = kernel.step(psi[None, :], dW[None, :])
    except _Collapse as exc:
        raise IntegrationError(f"trajectory-engine: norm collapsed to {exc.norm:.3g} "
                               f"(< {NORM_COLLAPSE:g}); dt = {dt} is too large") from None
    return out[0]


@dataclass(frozen=True, eq=False)
class TrajectoryRun:
    seed: str
    dt: float
    scheme: str
    times: np.ndarray
    observables: dict[str, np.ndarray]
    snapshot_times: np.ndarray
    snapshots: np.ndarray  # (n_snapshots, D)
    final_state: np.ndarray
    norm_drift_median: float
    norm_drift_max: float

    def series(self, name: str) -> TimeSeries:
        return TimeSeries(self.times, self.observables[name], name)


def _prepare_observables(observables, n_spins):
    if observables is None:
        observables = default_observables(n_spins)
    elif isinstance(observables, np.ndarray):
        observables = {"observable": observables}
    names = list(observables)
    mats = [np.asarray(observables[k], dtype=complex) for k in names]
    herm = [np.allclose(m, m.conj().T) for m in mats]
    stacked = np.concatenate(mats, axis=0).T.copy() if mats else None
    return names, stacked, herm


def _run_block(lind: Lindbladian, psi0s: np.ndarray, t_final: float, dt: float, streams,
               observables=None, record_stride: int = 1, snapshot_stride: int | None = None,
               snapshot_start: float = 0.0, scheme: str = "split", callback=None) -> list[TrajectoryRun]:
    """Integrate a batch of states; one shared stream broadcasts the same noise to every row."""
    if not t_final >= 0:
        raise ValidationError(f"t_final must be >= 0, got {t_final}")
    kernel = _Kernel(lind, dt, scheme)
    B, D = psi0s.shape
    K = lind.n_jumps
    shared = len(streams) == 1 and B > 1
    n_spins = int(round(np.log2(D)))
    names, obs_right, herm = _prepare_observables(observables, n_spins)
    n_obs = len(names)
    n_steps = int(round(t_final / dt))
    record_stride = max(1, int(record_stride))
    n_rec = n_steps // record_stride + 1
    snap_first = int(np.ceil(snapshot_start / dt - 1e-9)) if snapshot_stride else None

    rec = np.empty((B, n_obs, n_rec), dtype=complex)
    drift_rec = np.zeros((B, n_rec))
    drift_max = np.zeros(B)
    snaps, snap_t = [], []

    psi = np.array(psi0s, dtype=complex)

    def record(r):
        if n_obs:
            Ap = (psi @ obs_right).reshape(B, n_obs, D)
            rec[:, :, r] = np.einsum("bd,bnd->bn", psi.conj(), Ap)

    record(0)
    if snapshot_stride and snap_first == 0:
        snaps.append(psi.copy())
        snap_t.append(0.0)
    r = 1
    step = 0
    while step < n_steps:
        chunk = min(_CHUNK, n_steps - step)
        if shared:
            noise = np.broadcast_to(streams[0].draw(chunk)[None], (B, chunk, K))
        else:
            noise = np.stack([s.draw(chunk) for s in streams], axis=0)
        for c in range(chunk):
            try:
                psi, norms = kernel.step(psi, noise[:, c, :])
            except _Collapse as exc:
                seeds = ", ".join(streams[0 if shared else i].label for i in exc.rows)
                raise IntegrationError(
                    f"trajectory-engine: norm collapsed to {exc.norm:.3g} (< {NORM_COLLAPSE:g}) "
                    f"at t={(step + 1) * dt:.6g} for seed(s) {seeds}; reduce dt") from None
            step += 1
            drift = np.abs(norms - 1.0)
            np.maximum(drift_max, drift, out=drift_max)
            if callback is not None:
                replaced = callback(step, step * dt, psi)
                if replaced is not None:
                    psi = replaced
            if step % record_stride == 0:
                record(r)
                drift_rec[:, r] = drift
                r += 1
            if snapshot_stride and step >= snap_first and (step - snap_first) % snapshot_stride == 0:
                snaps.append(psi.copy())
                snap_t.append(step * dt)

    times = np.arange(n_rec) * record_stride * dt
    snap_arr = np.stack(snaps, axis=1) if snaps else np.zeros((B, 0, D), dtype=complex)
    runs = []
    for b in range(B):
        vals = {k: (rec[b, i].real.copy() if herm[i] else rec[b, i].copy()) for i, k in enumerate(names)}
        med = float(np.median(drift_rec[b, 1:])) if n_rec > 1 else 0.0
        runs.append(TrajectoryRun(
            seed=streams[0 if shared else b].label,
            dt=dt,
            scheme=scheme,
            times=times,
            observables=vals,
            snapshot_times=np.array(snap_t),
            snapshots=snap_arr[b],
            final_state=psi[b].copy(),
            norm_drift_median=med,
            norm_drift_max=float(drift_max[b]),
        ))
    return runs


def run_trajectory(lind: Lindbladian, psi0: np.ndarray, t_final: float, dt: float = 1e-3, seed=0,
                   observables=None, record_stride: int = 1, snapshot_stride: int | None = None,
                   snapshot_start: float = 0.0, scheme: str = "split") -> TrajectoryRun:
    """One trajectory; deterministic given ``(seed, dt, t_final, scheme)``.

    ``seed`` is an int or a ``SeedSequence`` (see ``trajectory_seed``).
    Snapshots of the state are kept every ``snapshot_stride`` steps from
    ``snapshot_start`` on.
    """
    psi0 = check_state_vector(psi0)
    stream = NoiseStream(seed, lind.n_jumps, dt)
    return _run_block(lind, psi0[None, :], t_final, dt, [stream], observables, record_stride,
                      snapshot_stride, snapshot_start, scheme)[0]


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    n_traj: int
    master_seed: int
    times: np.ndarray
    mean: dict[str, TimeSeries]
    stderr: dict[str, TimeSeries]
    seeds: list[str]
    summaries: list[dict]
    runs: list[TrajectoryRun] | None = field(default=None)
    values: dict[str, np.ndarray] | None = field(default=None)  # (n_traj, n_times) per observable


def _block_job(args):
    lind, psi0, t_final, dt, master_seed, indices, kwargs = args
    streams = [NoiseStream(trajectory_seed(master_seed, i), lind.n_jumps, dt) for i in indices]
    psi0s = np.tile(psi0, (len(indices), 1))
    return _run_block(lind, psi0s, t_final, dt, streams, **kwargs)


def run_ensemble(lind: Lindbladian, psi0: np.ndarray, t_final: float, dt: float = 1e-3, n_traj: int = 500,
                 master_seed: int = 0, observables=None, record_stride: int = 10,
                 snapshot_stride: int | None = None, snapshot_start: float = 0.0, scheme: str = "split",
                 workers: int = 1, block_size: int = BLOCK_SIZE, keep_runs: bool = False) -> EnsembleResult:
    """Mean and standard error over ``n_traj`` independently seeded trajectories.

    Trajectory ``i`` is seeded with ``trajectory_seed(master_seed, i)``.
    Blocks of ``block_size`` consecutive indices are the unit of work for the
    ``workers`` processes; the reduction runs in index order, so results do
    not depend on ``workers``.
    """
    if n_traj < 1:
        raise ValidationError(f"n_traj must be >= 1, got {n_traj}")
    psi0 = check_state_vector(psi0)
    kwargs = dict(observables=observables, record_stride=record_stride, snapshot_stride=snapshot_stride,
                  snapshot_start=snapshot_start, scheme=scheme)
    block_size = max(1, int(block_size))
    jobs = [(lind, psi0, t_final, dt, master_seed, list(range(a, min(a + block_size, n_traj))), kwargs)
            for a in range(0, n_traj, block_size)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_block_job, jobs))
    else:
        blocks = [_block_job(j) for j in jobs]
    runs = [run for block in blocks for run in block]

    times = runs[0].times
    names = list(runs[0].observables)
    values = {k: np.stack([run.observables[k] for run in runs]) for k in names}
    mean, stderr = {}, {}
    for k, arr in values.items():
        mean[k] = TimeSeries(times, arr.mean(axis=0), k)
        se = arr.std(axis=0, ddof=1) / np.sqrt(n_traj) if n_traj > 1 else np.zeros(arr.shape[1])
        stderr[k] = TimeSeries(times, se, k)
    summaries = [
        {
            "index": i,
            "seed": run.seed,
            "final": {k: run.observables[k][-1] for k in names},
            "norm_drift_median": run.norm_drift_median,
            "norm_drift_max": run.norm_drift_max,
        }
        for i, run in enumerate(runs)
    ]
    return EnsembleResult(
        n_traj=n_traj,
        master_seed=int(master_seed),
        times=times,
        mean=mean,
        stderr=stderr,
        seeds=[run.seed for run in runs],
        summaries=summaries,
        runs=runs if keep_runs else None,
        values=values,
    )


def run_shared_noise_pair(lind: Lindbladian, psi_f0: np.ndarray, psi_a0: np.ndarray, t_final: float,
                          dt: float = 1e-3, seed=0, observable=None, callback=None, record_stride: int = 1,
                          scheme: str = "split") -> tuple[TrajectoryRun, TrajectoryRun]:
    """Evolve a fiducial and an auxiliary state through the identical noise realization.

    ``callback(step, t, psi_f, psi_a)`` runs after every step and may return
    a replacement auxiliary state (normalized), or None to leave it alone.
    """
    psi_f0 = check_state_vector(psi_f0)
    psi_a0 = check_state_vector(psi_a0)
    if observable is None:
        observable = {"sigma_y_A": embed(pauli("y"), 1, int(round(np.log2(lind.dim))))}
    stream = NoiseStream(seed, lind.n_jumps, dt)

    block_callback = None
    if callback is not None:
        def block_callback(step, t, psi):
            new_a = callback(step, t, psi[0], psi[1])
            if new_a is None:
                return None
            out = psi.copy()
            out[1] = check_state_vector(new_a)
            return out

    fid, aux = _run_block(lind, np.stack([psi_f0, psi_a0]), t_final, dt, [stream], observable,
                          record_stride, None, 0.0, scheme, callback=block_callback)
    return fid, aux
