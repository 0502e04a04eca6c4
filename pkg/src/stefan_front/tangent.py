"""Tangent dynamics: linearized fields, volume growth and trace projections.

A set of m perturbation fields is evolved along a stored trajectory
``(U, V)`` by implicit Euler of

    z_t = z_xx + V z_x - gamma z - z(0, t) U_x / nu(V)

subject to ``z(0) + nu(V) [z_x](0) = 0`` and decay at the walls.  The
nonlocal term couples every row to the single boundary value ``z(0)``; the
linear systems are therefore banded plus rank one and are closed by a
bordered (Sherman-Morrison) solve.  Volume growth is read off from
re-orthonormalization stretch factors and cross-checked against the
quadrature of the trace projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded

from .errors import (DegenerateSetError, InsufficientSamplingError,
                     ParameterError, StepError)
from .kinetics import nu_eval
from .params import ProblemParams
from .reference_pde import FDMarch
from .spaces import GridField, SpatialGrid, derivative_field

__all__ = ["TangentSet", "linearized_step", "orthonormalize",
           "trace_entries", "volume_growth", "kaplan_yorke_dimension"]

GRAM_TOL = 1e-10
RANK_TOL = 1e-13
UNDERFLOW_GUARD = 1e-300


def _trap_weights(grid: SpatialGrid) -> np.ndarray:
    x = grid.x
    w = np.zeros_like(x)
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    return w


@dataclass(frozen=True)
class TangentSet:
    """m linearization fields sharing one trajectory, stored as columns."""

    grid: SpatialGrid
    Z: np.ndarray              # (grid.size, m)
    log_volume: float = 0.0
    renorm_period: int = 10

    @property
    def m(self) -> int:
        return self.Z.shape[1]

    def fields(self) -> list[GridField]:
        return [GridField(self.grid, self.Z[:, i], continuous=True)
                for i in range(self.m)]

    def boundary_residuals(self, nu_val: float) -> np.ndarray:
        """|z(0) + nu [z_x](0)| per field, relative to the field norm."""
        w = _trap_weights(self.grid)
        out = np.empty(self.m)
        for i in range(self.m):
            d = derivative_field(GridField(self.grid, self.Z[:, i],
                                           continuous=False))
            z0 = self.Z[self.grid.i0_left, i]
            nrm = math.sqrt(float(self.Z[:, i] ** 2 @ w)) or 1.0
            out[i] = abs(z0 + nu_val * d.jump_at_zero) / nrm
        return out

    @classmethod
    def seeded(cls, grid: SpatialGrid, m: int, seed: int = 0,
               renorm_period: int = 10, width: float = 2.0) -> "TangentSet":
        """Random smooth bump fields, orthonormalized, vanishing at the walls."""
        rng = np.random.default_rng(seed)
        x = grid.x
        Z = np.zeros((grid.size, m))
        span = 0.6 * grid.L
        for i in range(m):
            for _ in range(3):
                c = rng.uniform(-span, span)
                a = rng.uniform(-1.0, 1.0)
                wdt = width * rng.uniform(0.5, 1.5)
                Z[:, i] += a * np.exp(-((x - c) / wdt) ** 2)
        Z[0, :] = 0.0
        Z[-1, :] = 0.0
        Z[grid.i0_right, :] = Z[grid.i0_left, :]
        ts = cls(grid=grid, Z=Z, renorm_period=renorm_period)
        ts, _ = orthonormalize(ts)
        return replace(ts, log_volume=0.0)


def _banded_operator(grid: SpatialGrid, V: float, gamma: float, dt: float,
                     nu_val: float):
    """(3,2)-banded matrix for the implicit tangent step, minus the rank-one part."""
    n = grid.size
    dx = grid.dx
    iL, iR = grid.i0_left, grid.i0_right
    lband, uband = 3, 2
    ab = np.zeros((lband + uband + 1, n))

    def put(r, c, val):
        ab[uband + r - c, c] = val

    a = -1.0 / dx**2 + V / (2.0 * dx)
    b = 1.0 / dt + 2.0 / dx**2 + gamma
    c = -1.0 / dx**2 - V / (2.0 * dx)
    for j in range(1, iL):
        put(j, j - 1, a), put(j, j, b), put(j, j + 1, c)
    for j in range(iR + 1, n - 1):
        put(j, j - 1, a), put(j, j, b), put(j, j + 1, c)
    put(0, 0, 1.0)
    put(n - 1, n - 1, 1.0)
    # continuity of the value across the interface
    put(iL, iL, 1.0), put(iL, iR, -1.0)
    # z(0) + nu [z_x](0) = 0 with one-sided second-order slopes
    h = nu_val / (2.0 * dx)
    put(iR, iR, 1.0 - 3.0 * h)
    put(iR, iR + 1, 4.0 * h)
    put(iR, iR + 2, -1.0 * h)
    put(iR, iL, -3.0 * h)
    put(iR, iL - 1, 4.0 * h)
    put(iR, iL - 2, -1.0 * h)
    return ab, (lband, uband)


def linearized_step(tangent: TangentSet, U: GridField, V: float, dt: float,
                    params: ProblemParams) -> TangentSet:
    """Advance all tangent fields one implicit step along ``(U, V)``."""
    grid = tangent.grid
    gamma = params.gamma
    nu_val = float(nu_eval(params.kinetics, V))
    ab, bands = _banded_operator(grid, V, gamma, dt, nu_val)
    iL, iR = grid.i0_left, grid.i0_right
    n = grid.size

    ux = derivative_field(U).field.values
    cvec = np.zeros(n)
    cvec[1:iL] = ux[1:iL] / nu_val
    cvec[iR + 1:n - 1] = ux[iR + 1:n - 1] / nu_val

    rhs = tangent.Z / dt
    rhs[0, :] = 0.0
    rhs[-1, :] = 0.0
    rhs[iL, :] = 0.0
    rhs[iR, :] = 0.0

    Y = solve_banded(bands, ab, rhs)
    w = solve_banded(bands, ab, cvec)
    denom = 1.0 + w[iL]
    if abs(denom) < 1e-12:
        raise StepError("bordered tangent solve is singular", residual=denom)
    Z_new = Y - np.outer(w, Y[iL, :] / denom)
    return replace(tangent, Z=Z_new)


def orthonormalize(tangent: TangentSet):
    """Gram-Schmidt in L2, then rotate so m-1 basis fields vanish at 0.

    Returns the renewed set and the per-vector log stretch factors; the
    accumulated log volume grows by their sum.
    """
    grid = tangent.grid
    w = _trap_weights(grid)
    Z = tangent.Z.copy()
    m = tangent.m
    logs = np.empty(m)
    for i in range(m):
        orig = math.sqrt(float(Z[:, i] ** 2 @ w))
        for j in range(i):
            Z[:, i] -= (Z[:, j] * w) @ Z[:, i] * Z[:, j]
        r = math.sqrt(float(Z[:, i] ** 2 @ w))
        if orig == 0.0 or r <= RANK_TOL * orig:
            raise DegenerateSetError(
                f"tangent field {i} is numerically dependent (|r| = {r:.3e})")
        Z[:, i] /= r
        logs[i] = math.log(r)

    vals0 = Z[grid.i0_left, :].copy()
    nrm = float(np.linalg.norm(vals0))
    if m > 1 and nrm > 1e-14:
        # Householder rotation sending the interface-value vector to e_m
        u = vals0.copy()
        sgn = 1.0 if u[-1] >= 0 else -1.0
        u[-1] += sgn * nrm
        uu = float(u @ u)
        H = np.eye(m) - 2.0 * np.outer(u, u) / uu
        Z = Z @ H
    gram = (Z * w[:, None]).T @ Z
    if float(np.max(np.abs(gram - np.eye(m)))) > GRAM_TOL:
        raise DegenerateSetError("orthonormalization failed the Gram audit")
    new = replace(tangent, Z=Z, log_volume=tangent.log_volume + float(logs.sum()))
    return new, logs


def trace_entries(basis: TangentSet, U: GridField, gamma: float) -> np.ndarray:
    """Quadratic forms <F' phi_i, phi_i> for an orthonormal basis.

    Computed by grid quadrature of
    ``-gamma <phi,phi> - [phi'(0)] phi(0) - int phi_x^2 + [phi'(0)] int U_x phi``.
    """
    grid = basis.grid
    w = _trap_weights(grid)
    ux = derivative_field(U).field.values
    out = np.empty(basis.m)
    for i in range(basis.m):
        phi = basis.Z[:, i]
        d = derivative_field(GridField(grid, phi, continuous=False))
        phix = d.field.values
        phi0 = float(phi[grid.i0_left])
        jump = d.jump_at_zero
        nrm2 = float(phi**2 @ w)
        out[i] = (-gamma * nrm2 - jump * phi0 - float(phix**2 @ w)
                  + jump * float((ux * phi) @ w))
    return out


def kaplan_yorke_dimension(exponents) -> float:
    """Interpolated dimension where the cumulative exponent sum crosses zero."""
    lam = np.sort(np.asarray(exponents, dtype=float))[::-1]
    cum = np.cumsum(lam)
    if lam.size == 0 or lam[0] < 0:
        return 0.0
    nonneg = np.nonzero(cum >= 0)[0]
    j = int(nonneg[-1])
    if j == lam.size - 1:
        return float(lam.size)  # saturated: every partial sum still grows
    return float(j + 1 + cum[j] / abs(lam[j + 1]))


def volume_growth(params: ProblemParams, u0: GridField, m: int,
                  horizon: float, renorm_period: int = 10, seed: int = 0,
                  trace_every: int = 1) -> dict:
    """Evolve an m-set along the trajectory from ``u0`` and measure growth.

    Returns the Lyapunov spectrum estimate, the trajectory-averaged trace
    projection, the mean log-volume growth rate and the interpolated
    dimension estimate.
    """
    if m < 1:
        raise ParameterError("need m >= 1 tangent fields")
    dt = params.solver.dt
    n_steps = int(round(horizon / dt))
    if n_steps < 10 * renorm_period:
        raise InsufficientSamplingError(
            f"horizon {horizon} shorter than 10 renormalization periods")
    fd = FDMarch(params, u0)
    tangent = TangentSet.seeded(u0.grid, m, seed=seed,
                                renorm_period=renorm_period)
    stretch_sums = np.zeros(m)
    trace_samples = []
    for k in range(1, n_steps + 1):
        st = fd.advance(dt)
        tangent = linearized_step(tangent, st.u, st.v_current, dt, params)
        if k % renorm_period == 0 or _needs_renorm(tangent):
            tangent, logs = orthonormalize(tangent)
            stretch_sums += logs
            if (k // renorm_period) % trace_every == 0:
                entries = trace_entries(tangent, st.u, params.gamma)
                trace_samples.append(entries)
    T = n_steps * dt
    exponents = np.sort(stretch_sums / T)[::-1]
    traces = np.asarray(trace_samples)
    mean_trace = float(traces.sum(axis=1).mean()) if traces.size else float("nan")
    return {
        "m": m,
        "exponents": exponents.tolist(),
        "mean_log_volume_rate": float(stretch_sums.sum() / T),
        "mean_trace": mean_trace,
        "trace_entry_max": (float(traces.max()) if traces.size else float("nan")),
        "dimension_estimate": kaplan_yorke_dimension(exponents),
        "horizon": T,
        "renorm_period": renorm_period,
        "seed": seed,
    }


def _needs_renorm(tangent: TangentSet) -> bool:
    peak = float(np.max(np.abs(tangent.Z)))
    return peak < UNDERFLOW_GUARD or peak > 1e300
