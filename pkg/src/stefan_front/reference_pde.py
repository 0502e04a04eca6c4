"""Front-fixing finite-difference solver of the attached-frame problem.

Independent cross-validation oracle for the memory-integral march.  The
attached-frame equation ``u_t = u_xx + v(t) u_x - gamma u`` is advanced by
implicit Euler with second-order centered space; the scalar ``v`` is closed
per step by Newton iteration on the two interface conditions (the front
value is eliminated through ``u(0) = g_inv(v)`` and the one-sided derivative
jump must equal ``v``), with homogeneous Dirichlet walls at ``x = +-L``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import StepError
from .interface_solver import FrontHistory
from .kinetics import g_eval, g_inv, nu_eval
from .params import ProblemParams
from .spaces import GridField, SpatialGrid

__all__ = ["FDState", "FDMarch", "fd_step", "fd_run"]

NEWTON_TOL = 1e-10
MAX_OUTER = 8
NONNEG_WARN = -1e-6


@dataclass(frozen=True)
class FDState:
    grid: SpatialGrid
    u: GridField
    t: float
    v_current: float
    jump_residual: float = 0.0


class FDMarch:
    """Reusable stepping context (factorization-ready banded stencils)."""

    def __init__(self, params: ProblemParams, u0: GridField):
        self.params = params
        self.kin = params.kinetics
        self.gamma = params.gamma
        grid = u0.grid
        self.grid = grid
        self.dx = grid.dx
        self.iL = grid.i0_left
        self.iR = grid.i0_right
        self.nleft = self.iL - 1     # unknowns 1..iL-1
        self.nright = grid.size - 2 - self.iR  # unknowns iR+1..N-2
        if self.nleft < 2 or self.nright < 2:
            raise StepError("grid too coarse for the interface stencils")
        v0 = float(g_eval(self.kin, u0.value_at_interface()))
        self.state = FDState(grid=grid, u=u0, t=0.0, v_current=v0)
        self._v_prev = (v0, v0)  # for the quadratic start of the outer loop
        self._warned_negative = False
        self._same_sides = self.nleft == self.nright
        if self._same_sides:
            self._ab = np.zeros((3, self.nleft))
            self._b4 = np.zeros((self.nleft, 4))
        else:
            self._ab_l = np.zeros((3, self.nleft))
            self._b2_l = np.zeros((self.nleft, 2))
            self._ab_r = np.zeros((3, self.nright))
            self._b2_r = np.zeros((self.nright, 2))
        self._ginv_s, self._nu_s = self.kin.scalar_inverse_funcs()

    # -- single implicit step --------------------------------------------

    def _side_solves(self, u_prev, v, dt):
        """Solve both half-line systems for unit and zero interface value."""
        dx, gamma = self.dx, self.gamma
        a = -1.0 / dx**2 + v / (2.0 * dx)   # coefficient on u_{j-1}
        b = 1.0 / dt + 2.0 / dx**2 + gamma
        c = -1.0 / dx**2 - v / (2.0 * dx)   # coefficient on u_{j+1}

        if self._same_sides:
            ab, b4 = self._ab, self._b4
            ab[0, 1:] = c
            ab[1, :] = b
            ab[2, :-1] = a
            b4[:, 0] = u_prev[1:self.iL]
            b4[:, 0] /= dt
            b4[-1, 1] = -c   # left block ends next to the interface
            b4[:, 2] = u_prev[self.iR + 1:-1]
            b4[:, 2] /= dt
            b4[0, 3] = -a    # right block starts next to the interface
            sol = solve_banded((1, 1), ab, b4)
            return sol[:, 0], sol[:, 1], sol[:, 2], sol[:, 3]

        ab, b2 = self._ab_l, self._b2_l
        ab[0, 1:] = c
        ab[1, :] = b
        ab[2, :-1] = a
        b2[:, 0] = u_prev[1:self.iL] / dt
        b2[-1, 1] = -c
        sol = solve_banded((1, 1), ab, b2)
        base_l, unit_l = sol[:, 0], sol[:, 1]

        ab, b2 = self._ab_r, self._b2_r
        ab[0, 1:] = c
        ab[1, :] = b
        ab[2, :-1] = a
        b2[:, 0] = u_prev[self.iR + 1:-1] / dt
        b2[0, 1] = -a
        sol = solve_banded((1, 1), ab, b2)
        return base_l, unit_l, sol[:, 0], sol[:, 1]

    def _interface_slopes(self, base_l, unit_l, base_r, unit_r):
        """One-sided slopes at 0 as affine coefficients in the front value."""
        dx = self.dx
        # left: ux(0-) = (3 u0 - 4 u_{-1} + u_{-2}) / (2 dx)
        pl = (-4.0 * base_l[-1] + base_l[-2]) / (2.0 * dx)
        ql = (3.0 - 4.0 * unit_l[-1] + unit_l[-2]) / (2.0 * dx)
        # right: ux(0+) = (-3 u0 + 4 u_{+1} - u_{+2}) / (2 dx)
        pr = (4.0 * base_r[0] - base_r[1]) / (2.0 * dx)
        qr = (-3.0 + 4.0 * unit_r[0] - unit_r[1]) / (2.0 * dx)
        return pr - pl, qr - ql  # jump = P + Q * u(0)

    def advance(self, dt: float, frozen_velocity: float | None = None) -> FDState:
        st = self.state
        u_prev = st.u.values
        if frozen_velocity is not None:
            new = self._advance_frozen(u_prev, dt, frozen_velocity)
            self.state = new
            return new

        kin = self.kin
        vm2, vm1 = self._v_prev
        v = min(max(2.0 * vm1 - vm2, -kin.V0 * (1 - 1e-14)), -kin.v0)
        residual = math.inf
        parts = None
        for _outer in range(MAX_OUTER):
            parts = self._side_solves(u_prev, v, dt)
            P, Q = self._interface_slopes(*parts)
            v_in = v
            # scalar Newton on R(v) = P + Q g_inv(v) - v with the stencil frozen
            for _ in range(30):
                gi = self._ginv_s(v)
                R = P + Q * gi - v
                dR = -Q * self._nu_s(v) - 1.0
                v_new = v - R / dR
                v_new = min(max(v_new, -kin.V0 * (1 - 1e-14)), -kin.v0)
                if abs(v_new - v) < 1e-14:
                    v = v_new
                    break
                v = v_new
            gi = self._ginv_s(v)
            residual = abs(P + Q * gi - v)
            if residual < NEWTON_TOL and abs(v - v_in) < 5e-11:
                break
        if residual >= NEWTON_TOL:
            raise StepError(
                f"interface Newton failed at t = {st.t + dt:.6g} "
                f"(residual {residual:.3e})", t=st.t + dt, residual=residual)

        base_l, unit_l, base_r, unit_r = parts
        vals = np.zeros_like(u_prev)
        vals[1:self.iL] = base_l + gi * unit_l
        vals[self.iL] = gi
        vals[self.iR] = gi
        vals[self.iR + 1:-1] = base_r + gi * unit_r
        if float(vals.min()) < NONNEG_WARN and not self._warned_negative:
            warnings.warn(
                f"fd solution dipped to {vals.min():.3e} < {NONNEG_WARN}; "
                "monotonicity of the scheme may be lost", RuntimeWarning)
            self._warned_negative = True
        new = FDState(grid=self.grid, u=GridField(self.grid, vals),
                      t=st.t + dt, v_current=v, jump_residual=residual)
        self.state = new
        self._v_prev = (vm1, v)
        return new

    def _advance_frozen(self, u_prev, dt, v):
        """Test hook: no interface conditions, x = 0 is an ordinary node."""
        dx, gamma = self.dx, self.gamma
        # merged grid with a single zero node
        merged = np.concatenate([u_prev[:self.iL + 1], u_prev[self.iR + 1:]])
        m = merged.size - 2
        a = -1.0 / dx**2 + v / (2.0 * dx)
        b = 1.0 / dt + 2.0 / dx**2 + gamma
        c = -1.0 / dx**2 - v / (2.0 * dx)
        ab = np.zeros((3, m))
        ab[0, 1:] = c
        ab[1, :] = b
        ab[2, :-1] = a
        sol = solve_banded((1, 1), ab, merged[1:-1] / dt)
        out = np.zeros_like(merged)
        out[1:-1] = sol
        vals = np.concatenate([out[:self.iL + 1], [out[self.iL]],
                               out[self.iL + 1:]])
        st = self.state
        return FDState(grid=self.grid, u=GridField(self.grid, vals),
                       t=st.t + dt, v_current=v)


def fd_step(state: FDState, dt: float, params: ProblemParams,
            frozen_velocity: float | None = None) -> FDState:
    """Advance one implicit step from an explicit state (functional form)."""
    march = FDMarch(params, state.u)
    march.state = state
    march._v_prev = (state.v_current, state.v_current)
    return march.advance(dt, frozen_velocity=frozen_velocity)


def fd_run(params: ProblemParams, u0: GridField, T_final: float,
           snapshot_times=()):
    """March the front-fixed solver; returns history plus requested snapshots.

    ``u0`` is interpreted in the attached frame at t = 0 (identical to the
    lab frame there).  Snapshot times snap to the step grid.
    """
    dt = params.solver.dt
    n_steps = int(round(T_final / dt))
    march = FDMarch(params, u0)
    want = {int(round(ts / dt)): float(ts) for ts in snapshot_times}
    v = np.empty(n_steps + 1)
    v[0] = march.state.v_current
    snapshots = {}
    if 0 in want:
        snapshots[0.0] = u0
    for k in range(1, n_steps + 1):
        st = march.advance(dt)
        v[k] = st.v_current
        if k in want:
            snapshots[want[k]] = st.u
    s = np.concatenate([[0.0], np.cumsum(0.5 * dt * (v[1:] + v[:-1]))])
    bt = np.asarray(g_inv(params.kinetics, v))
    hist = FrontHistory(dt=dt, v=v, s=s, boundary_temp=bt)
    return hist, snapshots
