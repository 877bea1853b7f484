"""Experiment configuration: dataclasses, validation and JSON round-tripping.

A config file is a JSON object.  Every section and field is optional and
falls back to the defaults below::

    {
      "model": {"n_spins": 4, "jx": 1.0, "jy": 1.0, "jz": 0.9, "gamma": 1.0,
                "topology": "ring", "dissipators": []},
      "initial_state": {"kind": "named", "name": "tilted_pairs"},
      "t_final": 200.0, "dt": 0.001, "record_stride": 10,
      "n_traj": 500, "master_seed": 12345, "scheme": "split", "workers": 1,
      "trajectories": {"t_final": 100.0, "record_stride": 100,
                       "snapshot_start": 80.0, "snapshot_stride": 100},
      "fft": {"window": "rect", "transient_cut": 20.0, "observable": "sigma_y_A"},
      "sync": {"pair": [1, 2], "window": null},
      "lyapunov": {"delta": 0.001, "delta_max": 0.05, "t_final": 50.0, "n_seeds": 10},
      "output_dir": "runs"
    }

An empty ``dissipators`` list means the two crossed pair channels
``sqrt(gamma)(s-_1 + s-_3)`` and ``sqrt(gamma)(s-_2 + s-_4)``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ValidationError
from .model import ModelSpec, preset
from .states import DEFAULT_STATE, NAMED_STATES
from .trajectories import SCHEMES


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


@dataclass
class TrajectoryOptions:
    t_final: float = 100.0
    record_stride: int = 100
    snapshot_start: float = 80.0
    snapshot_stride: int = 100


@dataclass
class FFTOptions:
    window: str = "rect"
    transient_cut: float = 20.0
    observable: str = "sigma_y_A"


@dataclass
class SyncOptions:
    pair: tuple[int, int] = (1, 2)
    window: tuple[float, float] | None = None  # None: last 20 time units


@dataclass
class LyapunovOptions:
    delta: float = 1e-3
    delta_max: float = 0.05
    t_final: float = 50.0
    n_seeds: int = 10


_SECTIONS = {
    "trajectories": TrajectoryOptions,
    "fft": FFTOptions,
    "sync": SyncOptions,
    "lyapunov": LyapunovOptions,
}


@dataclass
class ExperimentConfig:
    model: ModelSpec = field(default_factory=lambda: preset("xxz"))
    initial_state: dict = field(default_factory=lambda: {"kind": "named", "name": DEFAULT_STATE})
    t_final: float = 200.0
    dt: float = 1e-3
    record_stride: int = 10
    n_traj: int = 500
    master_seed: int = 12345
    scheme: str = "split"
    workers: int = 1
    trajectories: TrajectoryOptions = field(default_factory=TrajectoryOptions)
    fft: FFTOptions = field(default_factory=FFTOptions)
    sync: SyncOptions = field(default_factory=SyncOptions)
    lyapunov: LyapunovOptions = field(default_factory=LyapunovOptions)
    output_dir: str = "runs"

    def validate(self) -> "ExperimentConfig":
        """Raise a ValidationError listing every bad field path; return self otherwise."""
        errs = []

        def positive(path, x):
            if not _finite(x) or x <= 0:
                errs.append(f"{path}: must be a finite number > 0, got {x!r}")

        def nonneg_int(path, x, minimum=0):
            if isinstance(x, bool) or not isinstance(x, int) or x < minimum:
                errs.append(f"{path}: must be an integer >= {minimum}, got {x!r}")

        positive("dt", self.dt)
        positive("t_final", self.t_final)
        nonneg_int("record_stride", self.record_stride, 1)
        nonneg_int("n_traj", self.n_traj, 1)
        nonneg_int("master_seed", self.master_seed, 0)
        nonneg_int("workers", self.workers, 1)
        if self.scheme not in SCHEMES:
            errs.append(f"scheme: must be one of {SCHEMES}, got {self.scheme!r}")
        if _finite(self.dt) and _finite(self.t_final) and self.dt > self.t_final:
            errs.append(f"dt: larger than t_final ({self.dt} > {self.t_final})")

        tr = self.trajectories
        positive("trajectories.t_final", tr.t_final)
        nonneg_int("trajectories.record_stride", tr.record_stride, 1)
        nonneg_int("trajectories.snapshot_stride", tr.snapshot_stride, 1)
        if not _finite(tr.snapshot_start) or tr.snapshot_start < 0:
            errs.append(f"trajectories.snapshot_start: must be >= 0, got {tr.snapshot_start!r}")
        elif _finite(tr.t_final) and tr.snapshot_start > tr.t_final:
            errs.append("trajectories.snapshot_start: after trajectories.t_final")

        if self.fft.window not in ("rect", "hann"):
            errs.append(f"fft.window: must be 'rect' or 'hann', got {self.fft.window!r}")
        if not _finite(self.fft.transient_cut) or self.fft.transient_cut < 0:
            errs.append(f"fft.transient_cut: must be >= 0, got {self.fft.transient_cut!r}")

        n = self.model.n_spins
        pair = self.sync.pair
        if len(pair) != 2 or any(isinstance(s, bool) or not isinstance(s, int) or not 1 <= s <= n for s in pair):
            errs.append(f"sync.pair: need two sites in 1..{n}, got {list(pair)!r}")
        elif pair[0] == pair[1]:
            errs.append("sync.pair: sites must differ")
        if self.sync.window is not None:
            w = self.sync.window
            if len(w) != 2 or not all(_finite(x) for x in w) or w[0] > w[1] or w[0] < 0:
                errs.append(f"sync.window: need [t1, t2] with 0 <= t1 <= t2, got {list(w)!r}")

        ly = self.lyapunov
        if not _finite(ly.delta) or not 0 <= ly.delta < 1:
            errs.append(f"lyapunov.delta: must be in [0, 1), got {ly.delta!r}")
        positive("lyapunov.delta_max", ly.delta_max)
        positive("lyapunov.t_final", ly.t_final)
        nonneg_int("lyapunov.n_seeds", ly.n_seeds, 1)

        st = self.initial_state
        if not isinstance(st, dict):
            errs.append("initial_state: must be an object")
        else:
            kind = st.get("kind")
            if kind == "named":
                if st.get("name", DEFAULT_STATE) not in NAMED_STATES:
                    errs.append(f"initial_state.name: must be one of {NAMED_STATES}, got {st.get('name')!r}")
            elif kind == "product":
                angles = st.get("angles")
                if not isinstance(angles, list) or len(angles) != n:
                    errs.append(f"initial_state.angles: need {n} [theta, phi] pairs")
                elif not all(isinstance(a, (list, tuple)) and len(a) == 2 and all(_finite(x) for x in a)
                             for a in angles):
                    errs.append("initial_state.angles: every entry must be [theta, phi] with finite numbers")
            elif kind == "density_matrix":
                if "real" not in st:
                    errs.append("initial_state.real: required for a density matrix")
            else:
                errs.append(f"initial_state.kind: must be 'named', 'product' or 'density_matrix', got {kind!r}")

        if not isinstance(self.output_dir, str) or not self.output_dir:
            errs.append("output_dir: must be a non-empty string")
        if errs:
            raise ValidationError("invalid configuration: " + "; ".join(errs), errs)
        return self

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["model"] = self.model.to_dict()
        d["initial_state"] = copy.deepcopy(self.initial_state)
        for name in _SECTIONS:
            sec = asdict(getattr(self, name))
            d[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in sec.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        """Build and validate; unknown keys and bad types are reported with their field paths."""
        if not isinstance(d, dict):
            raise ValidationError("config: top level must be a JSON object")
        errs = []
        top = {f.name for f in fields(cls)}
        errs += [f"{k}: unknown field" for k in sorted(set(d) - top)]
        kwargs = {}
        for k in top & set(d):
            if k == "model":
                continue
            if k in _SECTIONS:
                sec_cls = _SECTIONS[k]
                sub = d[k]
                if not isinstance(sub, dict):
                    errs.append(f"{k}: must be an object")
                    continue
                names = {f.name for f in fields(sec_cls)}
                errs += [f"{k}.{x}: unknown field" for x in sorted(set(sub) - names)]
                vals = {x: sub[x] for x in names & set(sub)}
                for x in ("pair", "window"):
                    if isinstance(vals.get(x), list):
                        vals[x] = tuple(vals[x])
                kwargs[k] = sec_cls(**vals)
            else:
                kwargs[k] = copy.deepcopy(d[k])
        if "model" in d:
            try:
                if not isinstance(d["model"], dict):
                    raise ValidationError("model: must be an object")
                kwargs["model"] = ModelSpec.from_dict(d["model"])
            except ValidationError as exc:
                errs += [e if e.startswith("model") else f"model.{e}" for e in exc.errors]
            except (TypeError, KeyError) as exc:
                errs.append(f"model: {exc}")
        if errs:
            raise ValidationError("invalid configuration: " + "; ".join(errs), errs)
        try:
            return cls(**kwargs).validate()
        except TypeError as exc:
            raise ValidationError(f"invalid configuration: wrong value type ({exc})") from None


# Fields that never change the numbers a run produces; left out of the hash.
UNHASHED = ("output_dir", "workers")


def canonical_json(cfg: ExperimentConfig) -> str:
    d = {k: v for k, v in cfg.to_dict().items() if k not in UNHASHED}
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 of the canonical (sorted-key, compact) JSON form, ignoring ``UNHASHED`` fields."""
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ValidationError(f"config: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config: {path} is not valid JSON ({exc})") from None
    return ExperimentConfig.from_dict(raw)


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
