from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darksync.config import ExperimentConfig, config_hash, load_config, save_config
from darksync.errors import ValidationError
from darksync.io import read_csv, read_series_csv, run_directory, write_csv, write_json
from darksync.model import preset


def test_defaults_are_valid_and_round_trip(tmp_path):
    cfg = ExperimentConfig().validate()
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()
    assert config_hash(again) == config_hash(cfg)
    save_config(cfg, tmp_path / "c.json")
    assert config_hash(load_config(tmp_path / "c.json")) == config_hash(cfg)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-4, 1e-2), st.floats(1.0, 500.0), st.integers(1, 10_000), st.integers(0, 2**32),
       st.sampled_from(["xxz", "xyz"]), st.sampled_from(["rect", "hann"]))
def test_round_trip_is_lossless(dt, t_final, n_traj, seed, kind, window):
    d = ExperimentConfig(model=preset(kind), dt=dt, t_final=t_final, n_traj=n_traj, master_seed=seed).to_dict()
    d["fft"]["window"] = window
    d["sync"]["window"] = [1.0, 2.5]
    cfg = ExperimentConfig.from_dict(json.loads(json.dumps(d)))
    assert cfg.to_dict() == d


def test_hash_changes_with_content():
    a = ExperimentConfig()
    b = ExperimentConfig(master_seed=1)
    assert config_hash(a) != config_hash(b)
    # where results go and how many processes compute them does not change them
    assert config_hash(ExperimentConfig(output_dir="elsewhere", workers=4)) == config_hash(a)


def test_validation_reports_field_paths():
    bad = {"dt": -1, "n_traj": 0, "fft": {"window": "kaiser"}, "sync": {"pair": [1, 1]},
           "lyapunov": {"delta_max": 0}, "model": {"gamma": -2}, "colour": "red"}
    with pytest.raises(ValidationError) as exc:
        ExperimentConfig.from_dict(bad)
    paths = {e.split(":")[0] for e in exc.value.errors}
    assert {"model.gamma", "colour"} <= paths
    with pytest.raises(ValidationError) as exc:
        ExperimentConfig.from_dict({k: v for k, v in bad.items() if k not in ("model", "colour")})
    paths = {e.split(":")[0] for e in exc.value.errors}
    assert paths == {"dt", "n_traj", "fft.window", "sync.pair", "lyapunov.delta_max"}


def test_bad_initial_state_and_files(tmp_path):
    with pytest.raises(ValidationError, match="initial_state.name"):
        ExperimentConfig.from_dict({"initial_state": {"kind": "named", "name": "ghz"}})
    with pytest.raises(ValidationError, match="not found"):
        load_config(tmp_path / "missing.json")
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(ValidationError, match="JSON"):
        load_config(tmp_path / "broken.json")


def test_csv_header_and_exact_doubles(tmp_path):
    x = 0.1 + 0.2
    p = write_csv(tmp_path / "a.csv", ["t", "v"], [[0.0, x], [1.0, np.float64(1 / 3)]], "abc123", "2026-01-01T00:00:00Z")
    meta, cols, rows = read_csv(p)
    assert meta == {"tool": "darksync", "version": "0.1.0", "config_hash": "abc123",
                    "created": "2026-01-01T00:00:00Z"}
    assert cols == ["t", "v"]
    assert float(rows[0][1]) == x and float(rows[1][1]) == 1 / 3
    t, v, name = read_series_csv(p)
    assert name == "v" and list(t) == [0.0, 1.0]
    with pytest.raises(ValidationError):
        write_csv(tmp_path / "b.csv", ["t", "v"], [[1.0]], "h")


def test_json_and_run_directory(tmp_path):
    cfg = ExperimentConfig()
    d, h = run_directory(tmp_path, cfg, "evolve", "2026-01-01T00:00:00Z")
    assert d.name == f"evolve-{h[:12]}-20260101T000000Z"
    assert config_hash(load_config(d / "config.json")) == h
    d2, _ = run_directory(tmp_path, cfg, "evolve", "2026-01-01T00:00:00Z")
    assert d2 != d
    p = write_json(d / "s.json", {"x": np.float64(1.5), "z": 1 + 2j, "a": np.arange(2)}, h)
    doc = json.loads(p.read_text())
    assert doc["_meta"]["config_hash"] == h and doc["z"] == [1.0, 2.0] and doc["a"] == [0, 1]


def test_wrong_types_are_validation_errors():
    for bad in ({"sync": {"pair": 5}}, {"t_final": "long"}, {"model": [1, 2]}, {"fft": 3}):
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(bad)
