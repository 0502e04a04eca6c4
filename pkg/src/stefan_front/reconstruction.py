"""Temperature-field reconstruction from a front history.

The solution splits into the smoothed initial data and the single-layer
contribution of the moving interface,

    u(x, t) = T2(t)u0 (x) + T1(t) (x),

both evaluated here on demand in the frame attached to the front
(``x_tilde = x - s(t)``).  Reconstruction never runs during the velocity
march; snapshots are pure functions of ``(u0, history, t)`` and parallelize
freely.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import CoverageError, TimeOrderError
from .heat_kernel import HistoryQuadrature, LabFrameConvolution, eval_context_many
from .interface_solver import FrontHistory
from .spaces import GridField, SpatialGrid

__all__ = ["t2_apply", "t1_apply", "reconstruct"]


def t2_apply(u0: GridField, t: float, gamma: float, s_t: float,
             out_grid: SpatialGrid | None = None) -> GridField:
    """Initial-data contribution ``exp(-gamma t) int G(., t, xi, 0) u0 dxi``.

    Returned in the front frame centered at ``s_t``.
    """
    if t <= 0:
        raise TimeOrderError("t2 contribution needs t > 0")
    grid = out_grid if out_grid is not None else u0.grid
    conv = LabFrameConvolution(u0.grid.x, u0.values)
    vals = math.exp(-gamma * t) * conv.eval_many(grid.x + s_t, t)
    return GridField(grid, vals)


def _history_index(history: FrontHistory, t: float) -> int:
    n = int(round(t / history.dt))
    if abs(n * history.dt - t) > 1e-9 * max(history.dt, 1.0):
        raise CoverageError(f"t = {t} is not a history sample time")
    if n >= history.v.size:
        raise CoverageError(
            f"history covers [0, {history.t_final}], cannot reconstruct at {t}")
    return n

def t1_apply(history: FrontHistory, t: float, gamma: float,
             grid: SpatialGrid, quad_points: int = 3) -> GridField:
    """Free-boundary contribution, positive and decaying away from the front.

    ``t`` must be one of the history sample times (with enough coverage).
    The newest kernel panel is eta-refined down to a quarter grid spacing so
    near-front nodes are evaluated to full quadrature accuracy.
    """
    n = _history_index(history, t)
    if n == 0:
        return GridField.zero(grid)
    hq = HistoryQuadrature(history.dt, gamma, quad_points)
    s, v = history.s[:n + 1], history.v[:n + 1]
    amp, pos, inv4 = hq.assemble_context(n, s, v, skip_final=True)
    dx = min(grid.dx_left, grid.dx_right)
    amp_f, pos_f, inv4_f = hq.refined_final_context(n, s, v, eta_min=0.25 * dx)
    amp = np.concatenate([amp, amp_f])
    pos = np.concatenate([pos, pos_f])
    inv4 = np.concatenate([inv4, inv4_f])
    targets = grid.x + history.s[n]
    vals = -eval_context_many(targets, amp, pos, inv4)
    return GridField(grid, vals)


def reconstruct(u0: GridField, history: FrontHistory, t: float, gamma: float,
                out_grid: SpatialGrid | None = None,
                quad_points: int = 3) -> GridField:
    """Full field at time ``t`` in the front-attached frame.

    The value is continuous across the interface; the one-sided derivative
    jump there converges to ``v(t)`` under refinement.
    """
    grid = out_grid if out_grid is not None else u0.grid
    n = _history_index(history, t)
    if n == 0:
        if grid == u0.grid:
            return u0
        interp = np.interp(grid.x, u0.grid.x, u0.values)
        return GridField(grid, interp)
    part2 = t2_apply(u0, t, gamma, float(history.s[n]), out_grid=grid)
    part1 = t1_apply(history, t, gamma, grid, quad_points=quad_points)
    return GridField(grid, part1.values + part2.values)
