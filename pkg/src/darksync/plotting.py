"""Vector-graphics figures: time-series lines, eigenvalue scatter, polar phase scatter.

Rendering goes through the non-interactive Agg backend and writes SVG.  A
fixed hash salt and no date metadata keep repeated renders byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import ValidationError  # noqa: E402
from .series import TimeSeries  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.2),
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
    "legend.fontsize": 8,
    "svg.hashsalt": "darksync",
    "svg.fonttype": "path",
}


def _save(fig, path) -> Path:
    path = Path(path)
    if path.suffix.lower() != ".svg":
        path = path.with_suffix(".svg")
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_series(series: list[TimeSeries] | TimeSeries, path, xlabel: str = "t", ylabel: str = "",
                title: str = "") -> Path:
    """Line plot of one or more series on shared axes."""
    if isinstance(series, TimeSeries):
        series = [series]
    if not series or any(len(s) == 0 for s in series):
        raise ValidationError("plot_series: no data to plot")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for s in series:
            ax.plot(s.times, np.real(s.values), label=s.label or None)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend()
        return _save(fig, path)


def plot_eigenvalues(eigenvalues, path, flags=None, title: str = "Liouvillian spectrum") -> Path:
    """Complex-plane scatter; purely imaginary modes highlighted when ``flags`` are given."""
    lam = np.asarray(eigenvalues, dtype=complex)
    if lam.size == 0:
        raise ValidationError("plot_eigenvalues: no eigenvalues")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if flags is None:
            ax.scatter(lam.real, lam.imag, s=8)
        else:
            flags = np.asarray(flags)
            for flag, colour, size in (("decaying", "0.55", 6), ("zero", "tab:blue", 18),
                                       ("purely_imaginary", "tab:red", 24)):
                m = flags == flag
                if m.any():
                    ax.scatter(lam.real[m], lam.imag[m], s=size, c=colour, label=f"{flag} ({m.sum()})")
            ax.legend(loc="best")
        ax.axvline(0.0, color="k", lw=0.5)
        ax.set_xlabel(r"Re $\lambda$")
        ax.set_ylabel(r"Im $\lambda$")
        ax.set_title(title)
        return _save(fig, path)


def plot_polar(modulus, phase, path, title: str = "") -> Path:
    """Polar scatter of (phase, modulus) pairs, e.g. per-trajectory synchronization results."""
    r = np.asarray(modulus, dtype=float)
    th = np.asarray(phase, dtype=float)
    if r.size == 0 or r.shape != th.shape:
        raise ValidationError("plot_polar: need equally sized, non-empty modulus and phase arrays")
    with plt.rc_context(STYLE):
        fig = plt.figure(figsize=(4.0, 4.0))
        ax = fig.add_subplot(projection="polar")
        ax.scatter(th, r, s=6, alpha=0.6)
        ax.set_rlim(0, 1)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_spectrum(freqs, magnitude, path, peak: float | None = None, title: str = "") -> Path:
    f = np.asarray(freqs, dtype=float)
    m = np.asarray(magnitude, dtype=float)
    if f.size == 0 or f.shape != m.shape:
        raise ValidationError("plot_spectrum: need equally sized, non-empty arrays")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(f, m)
        if peak is not None:
            ax.axvline(peak, color="tab:red", lw=0.6, ls="--", label=f"f = {peak:.4f}")
            ax.legend()
        ax.set_xlim(0, min(f.max(), 3.0))
        ax.set_xlabel("frequency")
        ax.set_ylabel("|FFT|")
        if title:
            ax.set_title(title)
        return _save(fig, path)
