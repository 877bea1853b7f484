from __future__ import annotations

import re

import numpy as np
import pytest

from darksync.errors import ValidationError
from darksync.plotting import plot_eigenvalues, plot_polar, plot_series, plot_spectrum
from darksync.series import TimeSeries


def test_series_plot_is_deterministic_svg(tmp_path):
    s = TimeSeries(np.linspace(0, 50, 200), np.exp(-np.linspace(0, 50, 200) / 10) * -0.1, "lambda")
    a = plot_series(s, tmp_path / "a.svg")
    b = plot_series(s, tmp_path / "b")
    assert b.suffix == ".svg"
    text = a.read_text()
    assert text.lstrip().startswith("<?xml") and "<svg" in text
    assert a.read_bytes() == b.read_bytes()


def test_eigenvalue_scatter(tmp_path, xxz_spectrum):
    p = plot_eigenvalues(xxz_spectrum.eigenvalues, tmp_path / "e.svg", xxz_spectrum.flags)
    text = p.read_text()
    # text is rendered as paths; three flag layers plus their three legend handles
    assert len(set(re.findall(r'id="(PathCollection_\d+)"', text))) == 6


def test_polar_and_spectrum(tmp_path):
    rng = np.random.default_rng(0)
    plot_polar(rng.uniform(0.6, 0.9, 50), rng.normal(2.1, 0.1, 50), tmp_path / "p.svg")
    plot_spectrum(np.linspace(0.01, 5, 100), rng.uniform(size=100), tmp_path / "s.svg", peak=0.57)
    assert (tmp_path / "p.svg").exists() and (tmp_path / "s.svg").exists()


def test_empty_data_rejected(tmp_path):
    with pytest.raises(ValidationError):
        plot_series([], tmp_path / "x.svg")
    with pytest.raises(ValidationError):
        plot_series(TimeSeries(np.array([]), np.array([])), tmp_path / "x.svg")
    with pytest.raises(ValidationError):
        plot_eigenvalues([], tmp_path / "x.svg")
    with pytest.raises(ValidationError):
        plot_polar([], [], tmp_path / "x.svg")
    assert not (tmp_path / "x.svg").exists()
