"""Gaussian heat kernel and quadrature for the weakly singular memory integral.

The memory integral

    int_0^{t_n} G(x, t_n, s(tau), tau) exp(-gamma (t_n - tau)) v(tau) dtau

has a 1/sqrt(t_n - tau) endpoint singularity.  Substituting
``eta = sqrt(t_n - tau)`` removes it exactly:

    dtau-integrand -> exp(-(x - s)^2 / (4 eta^2)) exp(-gamma eta^2) v / sqrt(pi)

which is smooth in ``eta``, so fixed Gauss-Legendre nodes per time panel give
high-order product integration against piecewise-linear ``v`` and ``s``.  The
eta-panels, weights and in-panel positions depend only on the distance index
``d = n - k``, so they are tabulated once per march and reused by every step
(the O(N^2) history sweep then reduces to a few strided vector operations).
"""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import GridError, ParameterError, TimeOrderError

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

__all__ = [
    "kernel",
    "erf_tail_bound",
    "singular_step_weights",
    "HistoryQuadrature",
    "LabFrameConvolution",
]

GAUSS_POINTS = 3
SQRT_PI = math.sqrt(math.pi)

try:  # optional fused kernel; the numpy path below is the reference
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

if _numba is not None:
    @_numba.njit(cache=True, fastmath=True)
    def _memory_sum_jit(s, v, wfac, inv4, frac, n, d_first, x):  # pragma: no cover
        rows = n - d_first + 1
        q = wfac.shape[1]
        val = 0.0
        dval = 0.0
        kl = n - d_first
        for r in range(rows):
            k = kl - r
            row = d_first - 1 + r
            sl, sr = s[k], s[k + 1]
            vl, vr = v[k], v[k + 1]
            for j in range(q):
                fr = frac[row, j]
                pos = sl + (sr - sl) * fr
                amp = (vl + (vr - vl) * fr) * wfac[row, j]
                d = x - pos
                b = inv4[row, j]
                e = amp * math.exp(-d * d * b)
                val += e
                dval += e * d * b
        return val, -2.0 * dval

    @_numba.njit(cache=True, fastmath=True, parallel=True)
    def _gauss_sum_many_jit(xs, amp, pos, inv4):  # pragma: no cover
        out = np.empty(xs.size)
        for i in _numba.prange(xs.size):
            acc = 0.0
            x = xs[i]
            for j in range(amp.size):
                d = x - pos[j]
                acc += amp[j] * math.exp(-d * d * inv4[j])
            out[i] = acc
        return out
else:  # pragma: no cover
    _memory_sum_jit = None
    _gauss_sum_many_jit = None


def kernel(x, t, xi, tau):
    """Heat kernel ``exp(-(x-xi)^2 / (4(t-tau))) / sqrt(4 pi (t-tau))``."""
    dt = np.asarray(t, dtype=float) - np.asarray(tau, dtype=float)
    if np.any(dt <= 0):
        raise TimeOrderError("heat kernel needs t > tau")
    dx = np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)
    out = np.exp(-dx * dx / (4.0 * dt)) / np.sqrt(4.0 * math.pi * dt)
    return float(out) if out.ndim == 0 else out


def erf_tail_bound(a, b):
    """Upper bound on ``int_a^inf exp(-b eta^2) d eta`` for a >= 0, b > 0.

    Returns ``exp(-b a^2) / (2 sqrt(b))`` when ``a > 1/sqrt(b)`` and the
    half-line value ``sqrt(pi) / (2 sqrt(b))`` otherwise; always an upper
    bound on the true tail.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b <= 0):
        raise ParameterError("erf tail bound needs b > 0")
    if np.any(a < 0):
        raise ParameterError("erf tail bound needs a >= 0")
    sqb = np.sqrt(b)
    out = np.where(a * sqb > 1.0,
                   np.exp(-b * a * a) / (2.0 * sqb),
                   SQRT_PI / (2.0 * sqb))
    return float(out) if out.ndim == 0 else out


class HistoryQuadrature:
    """Tabulated Gauss-in-eta product quadrature for a uniform time grid.

    For evaluation time ``t_n = n dt`` the panel ``[t_{n-d}, t_{n-d+1}]``
    maps to ``eta`` in ``[sqrt((d-1) dt), sqrt(d dt)]``; everything that
    depends only on ``(d, q)`` lives in row ``d - 1`` of the 2D tables,
    grown geometrically as the march proceeds.
    """

    def __init__(self, dt: float, gamma: float, points: int = GAUSS_POINTS):
        if dt <= 0:
            raise ParameterError("time step must be positive")
        if points < 2:
            raise ParameterError("need at least 2 Gauss points per panel")
        self.dt = float(dt)
        self.gamma = float(gamma)
        self.points = int(points)
        gx, gw = np.polynomial.legendre.leggauss(points)
        self._gx = gx  # nodes on [-1, 1]
        self._gw = gw
        self._rows = 0
        cap = 64
        self.eta2 = np.empty((cap, points))
        self.inv4eta2 = np.empty((cap, points))
        self.wfac = np.empty((cap, points))
        self.frac = np.empty((cap, points))

    def ensure(self, n: int):
        """Grow the tables so distance indices 1..n are available."""
        if n <= self._rows:
            return
        if n > self.eta2.shape[0]:
            cap = max(2 * self.eta2.shape[0], n)
            for name in ("eta2", "inv4eta2", "wfac", "frac"):
                old = getattr(self, name)
                new = np.empty((cap, self.points))
                new[:self._rows] = old[:self._rows]
                setattr(self, name, new)
        d = np.arange(self._rows + 1, n + 1, dtype=float)[:, None]
        eta_lo = np.sqrt((d - 1.0) * self.dt)
        eta_hi = np.sqrt(d * self.dt)
        half = 0.5 * (eta_hi - eta_lo)
        eta = 0.5 * (eta_hi + eta_lo) + half * self._gx[None, :]
        eta2 = eta * eta
        rows = slice(self._rows, n)
        self.eta2[rows] = eta2
        self.inv4eta2[rows] = 0.25 / eta2
        self.wfac[rows] = (half * self._gw[None, :]
                           * np.exp(-self.gamma * eta2) / SQRT_PI)
        self.frac[rows] = d - eta2 / self.dt  # position inside panel, in [0, 1]
        self._rows = n

    def assemble_context(self, n: int, s, v, skip_final: bool = False):
        """Amplitude/position/width arrays for the memory sum at step n.

        The integral at target x is ``sum(amp * exp(-(x - pos)^2 * inv4))``.
        With ``skip_final`` the newest panel (which involves the still
        unknown sample n) is left out.  ``s`` and ``v`` must hold samples
        0..n (0..n-1 when the final panel is skipped).
        """
        d_first = 2 if skip_final else 1
        if n < d_first:
            e = np.empty(0)
            return e, e, e
        self.ensure(n)
        s = np.asarray(s)
        v = np.asarray(v)
        # rows d = d_first..n pair with panels k = n - d in descending order;
        # reversed slices of the sample arrays line up without any gathers
        fr = self.frac[d_first - 1:n]
        om = 1.0 - fr
        kl_hi = n - d_first          # k runs kl_hi..0
        s_l = s[kl_hi::-1, None]
        s_r = s[kl_hi + 1:0:-1, None]
        v_l = v[kl_hi::-1, None]
        v_r = v[kl_hi + 1:0:-1, None]
        pos = s_l * om + s_r * fr
        amp = (v_l * om + v_r * fr) * self.wfac[d_first - 1:n]
        return amp.ravel(), pos.ravel(), self.inv4eta2[d_first - 1:n].ravel()

    def tail_context(self, n: int, s, v):
        """Frozen part of the memory sum at step n (panels 0..n-2)."""
        return self.assemble_context(n, s, v, skip_final=True)

    def memory_sum(self, n: int, s, v, x: float, skip_final: bool = True):
        """Value and x-derivative of the memory sum at target ``x``.

        Uses the fused compiled kernel when available; otherwise assembles
        the context arrays and reduces them with :func:`eval_context`.
        """
        d_first = 2 if skip_final else 1
        if n < d_first:
            return 0.0, 0.0
        self.ensure(n)
        s = np.ascontiguousarray(s, dtype=float)
        v = np.ascontiguousarray(v, dtype=float)
        if _memory_sum_jit is not None:
            return _memory_sum_jit(s, v, self.wfac, self.inv4eta2, self.frac,
                                   n, d_first, float(x))
        amp, pos, inv4 = self.assemble_context(n, s, v, skip_final=skip_final)
        return eval_context(float(x), amp, pos, inv4, derivative=True)

    def final_panel_context(self, n: int):
        """(wfac, inv4, frac) views for the newest panel (distance 1)."""
        self.ensure(n)
        return self.wfac[0], self.inv4eta2[0], self.frac[0]

    def refined_final_context(self, n: int, s, v, eta_min: float):
        """Final-panel context with geometric eta-refinement toward eta = 0.

        Off-front targets at distance delta see an integrand boundary layer
        of width ~delta/2 in eta; subdividing the final panel down to
        ``eta_min`` (about a quarter of the closest target offset) restores
        full quadrature accuracy there.  On-front evaluation has no layer
        and needs no refinement.
        """
        dt = self.dt
        eta_hi = math.sqrt(dt)
        levels = 0
        if eta_min < eta_hi:
            levels = min(60, max(0, int(math.ceil(math.log2(eta_hi / eta_min)))))
        edges = [eta_hi * 0.5**j for j in range(levels + 1)] + [0.0]
        s_l, s_r = float(s[n - 1]), float(s[n])
        v_l, v_r = float(v[n - 1]), float(v[n])
        amps, poss, inv4s = [], [], []
        for hi, lo in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo)
            eta = 0.5 * (hi + lo) + half * self._gx
            eta2 = eta * eta
            wf = half * self._gw * np.exp(-self.gamma * eta2) / SQRT_PI
            fr = 1.0 - eta2 / dt
            poss.append(s_l + (s_r - s_l) * fr)
            amps.append((v_l + (v_r - v_l) * fr) * wf)
            inv4s.append(0.25 / eta2)
        return (np.concatenate(amps), np.concatenate(poss),
                np.concatenate(inv4s))


def eval_context(x, amp, pos, inv4, derivative: bool = False):
    """Evaluate ``sum(amp * exp(-(x-pos)^2 * inv4))`` and optionally d/dx."""
    d = x - pos
    d2 = d * d
    np.multiply(d2, inv4, out=d2)
    np.negative(d2, out=d2)
    e = np.exp(d2, out=d2)
    val = float(np.dot(amp, e))
    if not derivative:
        return val
    np.multiply(e, amp, out=e)
    np.multiply(e, d, out=e)
    dval = -2.0 * float(np.dot(e, inv4))
    return val, dval


def eval_context_many(xs, amp, pos, inv4, chunk_floats: float = 4e6):
    """Vectorized :func:`eval_context` over many targets."""
    xs = np.ascontiguousarray(xs, dtype=float)
    if amp.size == 0:
        return np.zeros(xs.size)
    if _gauss_sum_many_jit is not None:
        return _gauss_sum_many_jit(xs, np.ascontiguousarray(amp),
                                   np.ascontiguousarray(pos),
                                   np.ascontiguousarray(inv4))
    out = np.zeros(xs.size)
    chunk = max(1, int(chunk_floats / max(amp.size, 1)))
    for i in range(0, xs.size, chunk):
        d = xs[i:i + chunk, None] - pos[None, :]
        np.multiply(d, d, out=d)
        np.multiply(d, -inv4[None, :], out=d)
        np.exp(d, out=d)
        out[i:i + chunk] = d @ amp
    return out


def singular_step_weights(t_n, t_grid, s_samples, x_target, gamma,
                          points: int = GAUSS_POINTS):
    """Quadrature weights for the memory integral against piecewise-linear v.

    Returns ``w`` with ``sum(w[k] * v[k])`` approximating

        int_0^{t_n} G(x_target, t_n, s(tau), tau) exp(-gamma (t_n-tau)) v(tau) dtau

    where ``s`` is interpolated piecewise-linearly from ``s_samples`` on the
    uniform ``t_grid``.  The square-root endpoint singularity is integrated
    exactly through the eta substitution; the total weight of the final
    panel is O(sqrt(dt)).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2:
        raise GridError("time grid needs at least two samples")
    steps = np.diff(t_grid)
    if np.any(steps <= 0):
        raise GridError("time grid must be strictly increasing")
    dt = steps[0]
    if np.any(np.abs(steps - dt) > 1e-9 * dt):
        raise GridError("time grid must be uniform")
    n = int(round((t_n - t_grid[0]) / dt))
    if n < 1 or n >= t_grid.size or abs(t_grid[0] + n * dt - t_n) > 1e-9 * dt:
        raise GridError("t_n must be a grid time with history below it")
    s = np.asarray(s_samples, dtype=float)
    if s.size < n + 1:
        raise GridError("need a front position sample per grid time")

    hq = HistoryQuadrature(dt, gamma, points)
    hq.ensure(n)
    q = points
    fr = hq.frac[:n].ravel()
    om = 1.0 - fr
    k = np.repeat(np.arange(n - 1, -1, -1), q)  # panel per slot, d ascending
    pos = s[k] * om + s[k + 1] * fr
    d = x_target - pos
    contrib = hq.wfac[:n].ravel() * np.exp(-d * d * hq.inv4eta2[:n].ravel())
    w = np.zeros(t_grid.size)
    np.add.at(w, k, contrib * om)
    np.add.at(w, k + 1, contrib * fr)
    return w


class LabFrameConvolution:
    """Trapezoid evaluation of ``int G(x, t, xi, 0) u0(xi) d xi`` on a grid.

    ``u0`` lives on the truncated lab-frame grid; the neglected mass beyond
    the edges is bounded with :func:`erf_tail_bound` against the edge values.
    """

    def __init__(self, grid_x, u0_values):
        x = np.asarray(grid_x, dtype=float)
        u = np.asarray(u0_values, dtype=float)
        if x.shape != u.shape:
            raise GridError("grid and field sizes differ")
        w = np.zeros_like(x)
        w[1:-1] = 0.5 * (x[2:] - x[:-2])
        w[0] = 0.5 * (x[1] - x[0])
        w[-1] = 0.5 * (x[-1] - x[-2])
        self.x = x
        self.uw = u * w
        self.edge_lo = float(x[0])
        self.edge_hi = float(x[-1])
        self.edge_vals = (abs(float(u[0])), abs(float(u[-1])))
        self._buf = np.empty_like(x)

    def eval(self, x, t, derivative: bool = False):
        d = np.subtract(x, self.x, out=self._buf)
        e = d * d
        np.multiply(e, -1.0 / (4.0 * t), out=e)
        np.exp(e, out=e)
        e /= math.sqrt(4.0 * math.pi * t)
        val = float(np.dot(self.uw, e))
        if not derivative:
            return val
        np.multiply(e, self.uw, out=e)
        dval = float(np.dot(e, d)) * (-0.5 / t)
        return val, dval

    def eval_many(self, xs, t):
        norm = math.sqrt(4.0 * math.pi * t)
        out = eval_context_many(xs, self.uw, self.x,
                                np.full(self.x.size, 0.25 / t))
        return out / norm

    def truncation_bound(self, x, t) -> float:
        """Bound on the neglected tail, assuming |u0| <= edge value outside."""
        a_hi = max(0.0, (self.edge_hi - x) / math.sqrt(4.0 * t))
        a_lo = max(0.0, (x - self.edge_lo) / math.sqrt(4.0 * t))
        hi = self.edge_vals[1] * erf_tail_bound(a_hi, 1.0) / SQRT_PI
        lo = self.edge_vals[0] * erf_tail_bound(a_lo, 1.0) / SQRT_PI
        return float(lo + hi)
