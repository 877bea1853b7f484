from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Samples of one observable on a strictly increasing time grid."""

    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values)
        if t.ndim != 1 or v.shape[:1] != t.shape:
            raise ValidationError(f"series {self.label!r}: times {t.shape} and values {v.shape} do not match")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValidationError(f"series {self.label!r}: times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size

    @property
    def spacing(self) -> float:
        if len(self) < 2:
            raise ValidationError(f"series {self.label!r} has fewer than two samples")
        return float((self.times[-1] - self.times[0]) / (len(self) - 1))

    def is_uniform(self, rtol: float = 1e-6) -> bool:
        if len(self) < 2:
            return True
        d = np.diff(self.times)
        return bool(np.all(np.abs(d - self.spacing) <= rtol * self.spacing))

    def window(self, t0: float, t1: float = np.inf) -> "TimeSeries":
        m = (self.times >= t0 - 1e-12) & (self.times <= t1 + 1e-12)
        return TimeSeries(self.times[m], self.values[m], self.label)

    def at(self, t: float) -> complex | float:
        """Value at the grid point nearest ``t``."""
        return self.values[int(np.argmin(np.abs(self.times - t)))]
