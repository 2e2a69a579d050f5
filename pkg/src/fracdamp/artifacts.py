"""Deterministic CSV, JSON-lines and SVG output."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = ["format_value", "write_csv", "read_csv", "write_jsonl", "save_figure", "config_lines"]


def format_value(v) -> str:
    """Floats in scientific notation with 17 significant digits; everything else via str."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.16e}"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def config_lines(config: Mapping) -> list[str]:
    """``# key = value`` lines, keys sorted."""
    out = []
    for k in sorted(config):
        v = config[k]
        out.append(f"# {k} = {v if isinstance(v, str) else json.dumps(_json_default(v), sort_keys=True)}")
    return out


def write_csv(path, columns: Sequence[str], rows: Iterable[Mapping], config: Mapping | None = None):
    """Write rows under a ``#``-prefixed configuration block and a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for line in config_lines(config or {}):
            fh.write(line + "\r\n")
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row[c]) for c in columns])
    return path


def read_csv(path) -> tuple[dict, list[dict]]:
    """(config, rows) from a file written by :func:`write_csv`; numeric fields become floats."""
    config, body = {}, []
    with Path(path).open(newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(" = ")
                config[key] = val
            else:
                body.append(line)
    rows = []
    for rec in csv.DictReader(body):
        row = {}
        for k, v in rec.items():
            try:
                row[k] = float(v)
            except (TypeError, ValueError):
                row[k] = v
        rows.append(row)
    return config, rows


def _json_default(o):
    if isinstance(o, (np.floating, float)):
        o = float(o)
        return o if math.isfinite(o) else str(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return [_json_default(x) for x in o.tolist()]
    if isinstance(o, (list, tuple)):
        return [_json_default(x) for x in o]
    if isinstance(o, dict):
        return {k: _json_default(v) for k, v in o.items()}
    return o


def write_jsonl(path, records: Iterable[Mapping], mode: str = "w"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open(mode) as fh:
        for rec in records:
            fh.write(json.dumps(_json_default(dict(rec)), sort_keys=True, allow_nan=False) + "\n")
    return path


def save_figure(fig, path):
    """Save as SVG without timestamps and with fixed element ids."""
    import matplotlib

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "fracdamp", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    return path
