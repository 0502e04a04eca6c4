"""CSV/JSON persistence with deterministic, round-trippable formatting."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, GridError
from .interface_solver import FrontHistory
from .spaces import GridField, SpatialGrid

__all__ = [
    "write_history_csv", "read_history_csv",
    "write_field_csv", "read_field_csv",
    "write_json", "read_json",
]

FLOAT_FMT = "%.17g"


def _fmt(x: float) -> str:
    return FLOAT_FMT % float(x)


def write_history_csv(path, history: FrontHistory, source: str = "integral"):
    """Columns (t, v, s, u_boundary); the source tag names the solver."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "v", "s", "u_boundary", "source"])
        for t, v, s, b in zip(history.t, history.v, history.s,
                              history.boundary_temp):
            w.writerow([_fmt(t), _fmt(v), _fmt(s), _fmt(b), source])
    return path


def read_history_csv(path) -> FrontHistory:
    path = Path(path)
    rows = []
    with path.open() as fh:
        for row in csv.DictReader(fh):
            rows.append((float(row["t"]), float(row["v"]), float(row["s"]),
                         float(row["u_boundary"])))
    if len(rows) < 2:
        raise ConfigError(f"history file {path} has fewer than two samples")
    t = np.array([r[0] for r in rows])
    dt = float(t[1] - t[0])
    if np.max(np.abs(np.diff(t) - dt)) > 1e-9 * dt:
        raise ConfigError(f"history file {path} is not on a uniform time grid")
    return FrontHistory(dt=dt,
                        v=np.array([r[1] for r in rows]),
                        s=np.array([r[2] for r in rows]),
                        boundary_temp=np.array([r[3] for r in rows]))


def write_field_csv(path, field: GridField):
    """Columns (x_tilde, u, side); side marks the two interface samples."""
    path = Path(path)
    grid = field.grid
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_tilde", "u", "side"])
        for i, (x, u) in enumerate(zip(grid.x, field.values)):
            side = "L" if i == grid.i0_left else ("R" if i == grid.i0_right else "")
            w.writerow([_fmt(x), _fmt(u), side])
    return path


def read_field_csv(path) -> GridField:
    path = Path(path)
    xs, us, sides = [], [], []
    with path.open() as fh:
        for row in csv.DictReader(fh):
            xs.append(float(row["x_tilde"]))
            us.append(float(row["u"]))
            sides.append(row.get("side", ""))
    xs = np.asarray(xs)
    if "L" not in sides or "R" not in sides:
        raise GridError(f"field file {path} lacks the two interface samples")
    i0 = sides.index("L")
    if sides[i0 + 1] != "R" or xs[i0] != 0.0 or xs[i0 + 1] != 0.0:
        raise GridError(f"field file {path} has a malformed interface pair")
    grid = SpatialGrid(L=-xs[0], n_minus=i0, n_plus=len(xs) - i0 - 2)
    if np.max(np.abs(grid.x - xs)) > 1e-9 * max(1.0, grid.L):
        raise GridError(f"field file {path} is not on a symmetric uniform grid")
    return GridField(grid, np.asarray(us))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())
