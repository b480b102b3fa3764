"""CSV tables, trajectory dumps and ``key = value`` manifests.

All floats are written with 17 significant digits so that a read-back
reproduces the in-memory doubles exactly.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Grid1D, Trajectory

__all__ = [
    "fmt",
    "write_table",
    "read_table",
    "write_trajectory",
    "read_trajectory",
    "write_manifest",
    "read_manifest",
]


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(value)


def _parse(text: str):
    low = text.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_table(path, columns: Sequence[str], rows: Iterable[Mapping]) -> Path:
    """Write rows (mappings keyed by ``columns``) as CSV; empty rows give a header-only file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row[c]) for c in columns])
    return path


def read_table(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: _parse(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def write_trajectory(path, traj: Trajectory) -> Path:
    """Long-format dump with header ``t,x,value``, row-major by time."""
    g = traj.grid
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,x,value\n")
        for n, tn in enumerate(g.t):
            ts = fmt(tn)
            fh.writelines(f"{ts},{fmt(xi)},{fmt(v)}\n" for xi, v in zip(g.x, traj.values[n]))
    return path


def read_trajectory(path, grid: Grid1D) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trajectory(grid, data[:, 2].reshape(grid.nt + 1, grid.nx))


def write_manifest(path, entries: Mapping, sections: Mapping[str, Mapping] | None = None) -> Path:
    """Flat ``key = value`` text, keys sorted, optional ``[section]`` blocks."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{k} = {fmt(entries[k])}" for k in sorted(entries)]
    for name in sorted(sections or {}):
        lines.append("")
        lines.append(f"[{name}]")
        block = sections[name]
        lines.extend(f"{k} = {fmt(block[k])}" for k in sorted(block))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_manifest(path) -> dict:
    """Parse a manifest; section keys come back as ``section.key``."""
    out, section = {}, ""
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        out[f"{section}.{key}" if section else key] = _parse(value.strip())
    return out
