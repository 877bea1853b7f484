"""Result persistence: run directories, CSV tables and JSON summaries.

Every file opens with provenance: CSV files carry ``#``-prefixed comment
lines (tool, version, config hash, creation time) before an ordinary
RFC-4180 table; JSON files carry the same fields under ``"_meta"``.
Numbers are written with ``repr`` so doubles round-trip exactly.
"""

from __future__ import annotations

import csv
import io as _io
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_hash, save_config
from .errors import ValidationError

TOOL = "darksync"


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def header_fields(cfg_hash: str, created: str | None = None) -> dict:
    return {"tool": TOOL, "version": __version__, "config_hash": cfg_hash, "created": created or _now()}


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns: list[str], rows, cfg_hash: str, created: str | None = None) -> Path:
    path = Path(path)
    buf = _io.StringIO()
    for k, v in header_fields(cfg_hash, created).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValidationError(f"CSV row has {len(row)} cells, header has {len(columns)}")
        w.writerow([_cell(x) for x in row])
    path.write_text(buf.getvalue(), newline="")
    return path


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Return ``(header fields, column names, rows as strings)``."""
    meta, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition(":")
                meta[k.strip()] = v.strip()
            else:
                body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise ValidationError(f"{path}: no CSV table found")
    return meta, rows[0], rows[1:]


def read_series_csv(path, column: str | None = None) -> tuple[np.ndarray, np.ndarray, str]:
    """Time column plus one value column (default: the first after ``t``)."""
    _, cols, rows = read_csv(path)
    if "t" not in cols or len(cols) < 2:
        raise ValidationError(f"{path}: expected a 't' column and at least one value column, got {cols}")
    name = column or next(c for c in cols if c != "t")
    if name not in cols:
        raise ValidationError(f"{path}: no column {name!r}; available {cols}")
    ti, vi = cols.index("t"), cols.index(name)
    t = np.array([float(r[ti]) for r in rows])
    v = np.array([float(r[vi]) for r in rows])
    return t, v, name


def write_json(path, payload: dict, cfg_hash: str, created: str | None = None) -> Path:
    path = Path(path)
    doc = {"_meta": header_fields(cfg_hash, created), **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def run_directory(root, cfg: ExperimentConfig, command: str, created: str | None = None) -> tuple[Path, str]:
    """Create ``<root>/<command>-<hash12>-<timestamp>`` holding ``config.json``.

    Returns the directory and the full config hash.
    """
    h = config_hash(cfg)
    stamp = (created or _now()).replace(":", "").replace("-", "")
    base = Path(root) / f"{command}-{h[:12]}-{stamp}"
    d, k = base, 1
    while d.exists():
        k += 1
        d = base.with_name(f"{base.name}-{k}")
    d.mkdir(parents=True)
    save_config(cfg, d / "config.json")
    return d, h
