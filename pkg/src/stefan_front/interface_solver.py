"""March the interface velocity forward through its memory integral equation.

At each accepted time the velocity satisfies

    v(t) = g( exp(-gamma t) int G(s(t), t, xi, 0) u0(xi) dxi
              - int_0^t G(s(t), t, s(tau), tau) exp(-gamma (t-tau)) v(tau) dtau )

so it is confined to ``[-V0, -v0]`` by construction.  One trajectory is
strictly sequential (the memory sum grows with the history); independent
trajectories share nothing mutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ParameterError, StepError
from .heat_kernel import HistoryQuadrature, LabFrameConvolution
from .kinetics import g_eval
from .params import ProblemParams, SolverConfig
from .spaces import GridField, SpatialGrid, derivative_field

__all__ = ["FrontHistory", "VelocityMarch", "step", "run",
           "TravelingWave", "traveling_wave"]

TRUNCATION_TOL = 1e-8


@dataclass(frozen=True)
class FrontHistory:
    """Sampled interface velocity, position and boundary temperature."""

    dt: float
    v: np.ndarray
    s: np.ndarray
    boundary_temp: np.ndarray
    matching_residual: float = float("nan")

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.v.size)

    @property
    def t_final(self) -> float:
        return self.dt * (self.v.size - 1)

    def validate(self, kinetics, atol: float = 1e-12) -> dict:
        """Audit the structural invariants; returns measured margins."""
        v, s = self.v, self.s
        t = self.t
        in_range = bool(np.all(v >= -kinetics.V0) and np.all(v <= -kinetics.v0))
        s_trap = np.concatenate([[0.0], np.cumsum(0.5 * self.dt * (v[1:] + v[:-1]))])
        s_gap = float(np.max(np.abs(s - s_trap)))
        upper = float(np.max(s[1:] + kinetics.v0 * t[1:])) if v.size > 1 else 0.0
        lower = float(np.min(s[1:] + kinetics.V0 * t[1:])) if v.size > 1 else 0.0
        bt_gap = float(np.max(np.abs(g_eval(kinetics, self.boundary_temp) - v)))
        return {
            "velocity_confined": in_range,
            "position_self_consistency": s_gap,
            "position_upper_margin": upper,   # s(t) <= -v0 t  =>  <= 0
            "position_lower_margin": lower,   # s(t) >= -V0 t  =>  >= 0
            "kinetic_consistency": bt_gap,
            "ok": bool(in_range and s_gap <= atol and upper <= 1e-9
                       and lower >= -1e-9 and bt_gap <= 1e-9),
        }


class VelocityMarch:
    """Stateful forward march; one instance per trajectory."""

    def __init__(self, params: ProblemParams, u0: GridField, n_hint: int = 256):
        self.params = params
        self.cfg = params.solver
        self.gamma = params.gamma
        self.kin = params.kinetics
        self.dt = self.cfg.dt
        self.u0 = u0
        self.conv = LabFrameConvolution(u0.grid.x, u0.values)
        self.hq = HistoryQuadrature(self.dt, self.gamma, self.cfg.quad_points)
        cap = max(n_hint, 16)
        self.v = np.empty(cap)
        self.s = np.empty(cap)
        self.bt = np.empty(cap)
        self.n = 1
        u00 = u0.value_at_interface()
        self.v[0] = g_eval(self.kin, u00)
        self.s[0] = 0.0
        self.bt[0] = u00
        jump0 = derivative_field(u0).jump_at_zero
        self.matching_residual = float(self.v[0] - jump0)
        self.truncation_max = 0.0

    def _ensure_capacity(self, n):
        if n >= self.v.size:
            cap = max(2 * self.v.size, n + 1)
            for name in ("v", "s", "bt"):
                arr = np.empty(cap)
                arr[:self.n] = getattr(self, name)[:self.n]
                setattr(self, name, arr)

    def step(self) -> None:
        """Append one velocity sample by solving the discretized equation.

        The frozen history sum is evaluated once per step at a predicted
        front position and carried to first order in the position update;
        the outer loop re-freezes it in the rare case the position moved
        more than 1e-9 (the neglected quadratic term is then < 1e-16).
        """
        n = self.n
        self._ensure_capacity(n)
        dt, gamma = self.dt, self.gamma
        t_n = n * dt
        v_nm1, s_nm1 = self.v[n - 1], self.s[n - 1]
        decay = math.exp(-gamma * t_n)

        wf, inv4f, frf = self.hq.final_panel_context(n)
        omf = 1.0 - frf
        posf_base = s_nm1 * omf
        vf_base = v_nm1 * omf

        v_cur = 2.0 * self.v[n - 1] - self.v[n - 2] if n >= 2 else v_nm1
        v_cur = min(max(v_cur, -self.kin.V0), -self.kin.v0)

        def theta_about(x_hat, tail0, dtail0, i0_0, di0_0, v_val):
            x = s_nm1 + 0.5 * dt * (v_nm1 + v_val)
            dxh = x - x_hat
            df = x - (posf_base + x * frf)
            fin = float(np.dot(wf * (vf_base + v_val * frf),
                               np.exp(-df * df * inv4f)))
            theta = decay * (i0_0 + di0_0 * dxh) - (tail0 + dtail0 * dxh) - fin
            return max(theta, 0.0)

        residual = math.inf
        theta = 0.0
        for _outer in range(6):
            x_hat = s_nm1 + 0.5 * dt * (v_nm1 + v_cur)
            tail0, dtail0 = self.hq.memory_sum(n, self.s[:n], self.v[:n], x_hat)
            i0_0, di0_0 = self.conv.eval(x_hat, t_n, derivative=True)
            converged = False
            for _ in range(self.cfg.max_picard_iters):
                theta = theta_about(x_hat, tail0, dtail0, i0_0, di0_0, v_cur)
                v_new = g_eval(self.kin, theta)
                delta, v_cur = abs(v_new - v_cur), v_new
                if delta < 0.1 * self.cfg.picard_tol:
                    converged = True
                    break
            residual = abs(v_cur - g_eval(
                self.kin, theta_about(x_hat, tail0, dtail0, i0_0, di0_0, v_cur)))
            x_new = s_nm1 + 0.5 * dt * (v_nm1 + v_cur)
            if converged and residual < self.cfg.picard_tol \
                    and abs(x_new - x_hat) < 1e-9:
                break
        if residual >= self.cfg.picard_tol or not math.isfinite(v_cur):
            raise StepError(
                f"velocity step at t = {t_n:.6g} did not converge "
                f"(residual {residual:.3e})", t=t_n, residual=residual)

        self.v[n] = v_cur
        self.s[n] = s_nm1 + 0.5 * dt * (v_nm1 + v_cur)
        self.bt[n] = theta
        tb = decay * self.conv.truncation_bound(self.s[n], t_n)
        self.truncation_max = max(self.truncation_max, tb)
        self.n = n + 1

    def history(self) -> FrontHistory:
        n = self.n
        return FrontHistory(dt=self.dt, v=self.v[:n].copy(), s=self.s[:n].copy(),
                            boundary_temp=self.bt[:n].copy(),
                            matching_residual=self.matching_residual)


def step(history: FrontHistory, params: ProblemParams,
         u0: GridField | None = None) -> FrontHistory:
    """Extend a stored history by one sample (re-primes the memory sums)."""
    if u0 is None:
        u0 = params.solver.initial_data
    if u0 is None:
        raise ParameterError("stepping a history needs the initial field")
    march = VelocityMarch(params, u0, n_hint=history.v.size + 2)
    n = history.v.size
    march._ensure_capacity(n + 1)
    march.v[:n] = history.v
    march.s[:n] = history.s
    march.bt[:n] = history.boundary_temp
    march.n = n
    march.step()
    return march.history()


def run(params: ProblemParams, u0: GridField, T_final: float) -> FrontHistory:
    """March the interface over [0, T_final]."""
    n_steps = int(round(T_final / params.solver.dt))
    march = VelocityMarch(params, u0, n_hint=n_steps + 1)
    for _ in range(n_steps):
        march.step()
    if march.truncation_max > TRUNCATION_TOL:
        raise StepError(
            f"initial-data tail beyond the grid reached "
            f"{march.truncation_max:.3e} > {TRUNCATION_TOL}; enlarge L",
            residual=march.truncation_max)
    return march.history()


@dataclass(frozen=True)
class TravelingWave:
    """Constant-speed steady front with exponential tails."""

    V_star: float
    u_star: float
    lam_plus: float
    lam_minus: float
    profile: GridField
    residual: float

    def profile_on(self, grid: SpatialGrid) -> GridField:
        vals = np.where(grid.x < 0,
                        self.u_star * np.exp(self.lam_plus * grid.x),
                        self.u_star * np.exp(self.lam_minus * grid.x))
        return GridField(grid, vals)


def traveling_wave(params: ProblemParams) -> TravelingWave:
    """Solve for the steady front speed and its attached profile.

    The speed magnitude ``w = |V*|`` solves ``g(w / sqrt(w^2 + 4 gamma)) = -w``
    on ``[v0, V0]``; the front temperature is ``u* = w / sqrt(w^2 + 4 gamma)``
    and the profile decays with rates ``lam_+`` (ahead) and ``lam_-`` (behind).
    """
    kin, gamma = params.kinetics, params.gamma

    def front_temp(w):
        return w / math.sqrt(w * w + 4.0 * gamma)

    def f(w):
        return float(g_eval(kin, front_temp(w))) + w

    lo, hi = kin.v0, kin.V0
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        raise ParameterError(
            "no steady front speed: the kinetics and heat loss are "
            f"incompatible (f({lo}) = {flo:.3e}, f({hi}) = {fhi:.3e})")
    # several speeds can balance (extinct / middle / fast branches); take the
    # fast wave = topmost sign change on a descending log scan
    bracket = (lo, hi)
    w_prev = hi
    for wk in np.geomspace(hi, lo, 400)[1:]:
        if f(float(wk)) <= 0.0:
            bracket = (float(wk), w_prev)
            break
        w_prev = float(wk)
    w = brentq(f, bracket[0], bracket[1], xtol=1e-13, rtol=8.9e-16)
    u_star = front_temp(w)
    V_star = -w
    root = math.sqrt(V_star * V_star + 4.0 * gamma)
    lam_plus = 0.5 * (-V_star + root)
    lam_minus = 0.5 * (-V_star - root)
    jump_gap = abs(u_star * (lam_minus - lam_plus) - V_star)
    if jump_gap > 1e-12 * max(1.0, abs(V_star)):
        raise ParameterError(f"front jump identity violated by {jump_gap:.3e}")
    tw = TravelingWave(V_star=V_star, u_star=u_star, lam_plus=lam_plus,
                       lam_minus=lam_minus, profile=None,
                       residual=abs(f(w)))
    object.__setattr__(tw, "profile", tw.profile_on(params.grid))
    return tw
