"""Post-processing: dominant frequency, synchronization correlator, Lyapunov estimate."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateSignalError, UndefinedCorrelatorError, ValidationError
from .model import Lindbladian
from .operators import embed, n_spins_for_dim, pauli
from .series import TimeSeries
from .states import check_state_vector
from .trajectories import TrajectoryRun, run_shared_noise_pair

CORRELATOR_FLOOR = 1e-12
WINDOWS = ("rect", "hann")


@dataclass(frozen=True, eq=False)
class SpectralPeak:
    frequency: float  # cycles per unit time
    amplitude: float  # single-sided amplitude of the peak bin
    resolution: float
    spectrum: TimeSeries  # magnitude vs frequency, DC bin excluded
    n_samples: int

    @property
    def angular_frequency(self) -> float:
        return 2 * np.pi * self.frequency


def dominant_frequency(series: TimeSeries, transient_cut: float = 20.0, window: str = "rect",
                       min_samples: int = 64) -> SpectralPeak:
    """Largest non-DC Fourier component of the post-transient part of ``series``.

    The mean is removed first.  ``resolution`` is one over the analysed
    segment duration.
    """
    if window not in WINDOWS:
        raise ValidationError(f"unknown FFT window {window!r}; expected one of {WINDOWS}")
    if not series.is_uniform():
        raise ValidationError(f"series {series.label!r} is not uniformly sampled")
    seg = series.window(transient_cut)
    n = len(seg)
    if n < min_samples:
        raise ValidationError(f"only {n} samples after t={transient_cut}; need at least {min_samples}")
    h = seg.spacing
    x = np.asarray(seg.values)
    x = x - x.mean()
    taper = np.hanning(n) if window == "hann" else np.ones(n)
    norm = taper.sum()
    if np.iscomplexobj(x) and np.any(np.abs(x.imag) > 0):
        F = np.fft.fft(x * taper)
        f = np.abs(np.fft.fftfreq(n, h))
        mag = np.zeros(n // 2 + 1)
        np.maximum.at(mag, np.rint(f * n * h).astype(int), np.abs(F) / norm)
        freqs = np.arange(n // 2 + 1) / (n * h)
    else:
        F = np.fft.rfft(np.real(x) * taper)
        freqs = np.fft.rfftfreq(n, h)
        mag = 2 * np.abs(F) / norm
    mag, freqs = mag[1:], freqs[1:]
    k = int(np.argmax(mag))
    scale = max(1.0, float(np.max(np.abs(seg.values))))
    if mag[k] <= 1e-12 * scale:
        raise DegenerateSignalError(f"series {series.label!r} has no non-DC content after t={transient_cut}")
    return SpectralPeak(float(freqs[k]), float(mag[k]), 1.0 / (n * h),
                        TimeSeries(freqs, mag, f"|FFT {series.label}|"), n)


@lru_cache(maxsize=64)
def _correlator_ops(j: int, l: int, n: int):
    sp, sm = pauli("plus"), pauli("minus")
    for s in (j, l):
        if not 1 <= s <= n:
            raise ValidationError(f"site {s} out of range 1..{n}")
    cross = embed(sp, j, n) @ embed(sm, l, n)
    nj = embed(sp @ sm, j, n)
    nl = embed(sp @ sm, l, n)
    for a in (cross, nj, nl):
        a.setflags(write=False)
    return cross, nj, nl


def sync_correlator(state: np.ndarray, j: int, l: int) -> complex:
    """C_jl = <s+_j s-_l> / sqrt(<s+_j s-_j> <s+_l s-_l>) for a state vector or density matrix.

    Raises:
        UndefinedCorrelatorError: when either excitation expectation is below
            ``CORRELATOR_FLOOR``.
    """
    state = np.asarray(state, dtype=complex)
    n = n_spins_for_dim(state.shape[0])
    cross, nj, nl = _correlator_ops(int(j), int(l), n)
    if state.ndim == 1:
        num = np.vdot(state, cross @ state)
        dj = np.vdot(state, nj @ state).real
        dl = np.vdot(state, nl @ state).real
    else:
        num = np.trace(cross @ state)
        dj = np.trace(nj @ state).real
        dl = np.trace(nl @ state).real
    if dj < CORRELATOR_FLOOR or dl < CORRELATOR_FLOOR:
        raise UndefinedCorrelatorError(
            f"C_{j}{l} undefined: site excitations <s+s-> = {dj:.3g}, {dl:.3g} below {CORRELATOR_FLOOR:g}")
    return complex(num / np.sqrt(dj * dl))


def circular_mean(phases) -> float:
    """Mean direction of unit phasors, in (-pi, pi]."""
    z = np.mean(np.exp(1j * np.asarray(phases, dtype=float)))
    a = float(np.angle(z))
    return np.pi if a == -np.pi else a


def wrap_phase(x):
    return np.angle(np.exp(1j * np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class SyncResult:
    pair: tuple[int, int]
    modulus_mean: float
    phase: float  # circular mean of arg C over the window
    phase_drift: float  # slope of the unwrapped phase, rad per unit time
    window: tuple[float, float]
    n_samples: int
    n_undefined: int = 0


def steady_sync(run: TrajectoryRun, j: int, l: int, window: tuple[float, float] | None = None) -> SyncResult:
    """Synchronization statistics of one trajectory over a late-time window.

    The default window is the last 20 time units of the run.
    """
    if run.snapshots.shape[0] == 0:
        raise ValidationError("run has no state snapshots; rerun with snapshot_stride set")
    t_end = float(run.times[-1])
    t1, t2 = window if window is not None else (max(0.0, t_end - 20.0), t_end)
    st = run.snapshot_times
    if t1 < st[0] - 1e-9 or t2 > st[-1] + 1e-9 or t2 < t1:
        raise ValidationError(f"window [{t1}, {t2}] not covered by snapshots [{st[0]}, {st[-1]}]")
    mask = (st >= t1 - 1e-9) & (st <= t2 + 1e-9)
    ts, cs, undefined = [], [], 0
    for t, psi in zip(st[mask], run.snapshots[mask]):
        try:
            cs.append(sync_correlator(psi, j, l))
            ts.append(t)
        except UndefinedCorrelatorError:
            undefined += 1
    total = int(mask.sum())
    if total == 0 or undefined > 0.1 * total:
        raise UndefinedCorrelatorError(f"C_{j}{l} undefined at {undefined} of {total} snapshots in window")
    cs = np.array(cs)
    ph = np.angle(cs)
    drift = float(np.polyfit(ts, np.unwrap(ph), 1)[0]) if len(ts) > 1 else 0.0
    return SyncResult((j, l), float(np.mean(np.abs(cs))), circular_mean(ph), drift, (t1, t2), len(cs), undefined)


def phase_clustering(phases, halfwidth: float = 0.3) -> tuple[float, float]:
    """Cluster center (circular mean) and the fraction of phases within ``halfwidth`` of it."""
    phases = np.asarray(phases, dtype=float)
    center = circular_mean(phases)
    frac = float(np.mean(np.abs(wrap_phase(phases - center)) <= halfwidth))
    return center, frac


class ThresholdLyapunov:
    """Event-based largest-Lyapunov accumulator.

    Feed it the fiducial/auxiliary distance after every step.  When
    ``|distance| > delta_max`` it logs the growth factor ``|distance| / delta0``
    and asks the caller to reset the auxiliary trajectory.  The running
    estimate is ``sum_k ln d_k / t``.  Nothing here is quantum specific;
    any pair of trajectories that can be renormalized can be plugged in.
    """

    def __init__(self, delta0: float, delta_max: float):
        if not delta_max > 0:
            raise ValidationError(f"delta_max must be > 0, got {delta_max}")
        self.delta0 = float(delta0)
        self.delta_max = float(delta_max)
        self.events: list[tuple[float, float]] = []
        self.log_sum = 0.0

    def observe(self, t: float, distance: float) -> bool:
        d = abs(distance)
        if d <= self.delta_max:
            return False
        growth = d / self.delta0
        self.events.append((float(t), growth))
        self.log_sum += float(np.log(growth))
        return True

    def exponent(self, t: float) -> float:
        return self.log_sum / t if t > 0 else 0.0


@dataclass(frozen=True, eq=False)
class LyapunovTrace:
    delta0: float
    delta_max: float
    events: tuple[tuple[float, float], ...]
    lam: TimeSeries
    distance: TimeSeries

    @property
    def final(self) -> float:
        return float(self.lam.values[-1])


def random_direction(psi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform random complex unit vector orthogonal to ``psi``."""
    chi = rng.standard_normal(psi.shape[0]) + 1j * rng.standard_normal(psi.shape[0])
    chi -= psi * np.vdot(psi, chi)
    return chi / np.linalg.norm(chi)


def lyapunov(lind: Lindbladian, psi0: np.ndarray, observable: np.ndarray | None = None, t_final: float = 50.0,
             dt: float = 1e-3, seed: int = 0, delta: float = 1e-3, delta_max: float = 0.05,
             direction: np.ndarray | None = None, record_stride: int = 10, scheme: str = "split") -> LyapunovTrace:
    """Largest Lyapunov exponent from a fiducial/auxiliary trajectory pair.

    The auxiliary state starts as ``normalize(psi0 + delta*chi)``.  ``chi``
    is ``direction`` if given, otherwise a random unit vector orthogonal to
    ``psi0`` drawn from ``SeedSequence(seed, spawn_key=(1,))``; the shared
    noise uses ``SeedSequence(seed)``.  The distance is the difference of
    ``<observable>`` (default sigma_y on site A) between the two.  When it
    exceeds ``delta_max`` the growth factor is logged against the initial
    distance ``delta0`` and the auxiliary is reset to ``delta`` away from
    the fiducial along their current difference.
    """
    psi0 = check_state_vector(psi0)
    if observable is None:
        observable = embed(pauli("y"), 1, n_spins_for_dim(lind.dim))
    A = np.asarray(observable, dtype=complex)

    def expval(psi):
        return float(np.vdot(psi, A @ psi).real)

    if delta == 0:
        psi_a0 = psi0.copy()
    else:
        if direction is None:
            rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(1,)))
            chi = random_direction(psi0, rng)
        else:
            chi = np.asarray(direction, dtype=complex)
            chi = chi / np.linalg.norm(chi)
        psi_a0 = psi0 + delta * chi
        psi_a0 /= np.linalg.norm(psi_a0)
    delta0 = abs(expval(psi0) - expval(psi_a0))
    if delta != 0 and delta0 < 1e-12:
        raise ValidationError(
            f"initial observable distance {delta0:.3g} < 1e-12: the perturbation is invisible to the "
            "observable; choose a different perturbation direction")

    acc = ThresholdLyapunov(delta0 if delta0 > 0 else 1.0, delta_max)
    record_stride = max(1, int(record_stride))
    n_steps = int(round(t_final / dt))
    n_rec = n_steps // record_stride + 1
    dist = np.zeros(n_rec)
    lam = np.zeros(n_rec)
    dist[0] = expval(psi0) - expval(psi_a0)

    def on_step(step, t, psi_f, psi_a):
        d = expval(psi_f) - expval(psi_a)
        reset = acc.observe(t, d)
        if step % record_stride == 0:
            r = step // record_stride
            dist[r] = d
            lam[r] = acc.exponent(t)
        if reset:
            diff = psi_a - psi_f
            new = psi_f + delta * diff / np.linalg.norm(diff)
            return new / np.linalg.norm(new)
        return None

    run_shared_noise_pair(lind, psi0, psi_a0, t_final, dt, seed, {"observable": A}, callback=on_step,
                          record_stride=n_steps + 1 if n_steps else 1, scheme=scheme)
    times = np.arange(n_rec) * record_stride * dt
    return LyapunovTrace(delta0, float(delta_max), tuple(acc.events),
                         TimeSeries(times, lam, "lyapunov"), TimeSeries(times, dist, "distance"))
