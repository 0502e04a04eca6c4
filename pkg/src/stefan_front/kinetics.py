"""Kinetic velocity law of the moving interface.

The front speed is a monotone decreasing, bounded function ``g`` of the
front temperature: ``-V0 <= g(u) <= -v0`` for all ``u >= 0`` with
``g(0) = -v0``.  All derived quantities used elsewhere (inverse, slope
bound, the sensitivity ``nu(V) = -(g^-1)'(V)`` and its lower bound
``nu0``) are computed here at construction time and audited on a grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, ParameterError, RangeError

__all__ = [
    "Family",
    "KineticsModel",
    "arrhenius",
    "from_table",
    "custom",
    "g_eval",
    "g_inv",
    "g_prime",
    "nu_eval",
]

AUDIT_POINTS = 10_000
AUDIT_U_MAX = 100.0
NU_GRID_POINTS = 2048
INV_TOL = 1e-12


class Family(enum.Enum):
    ARRHENIUS = "arrhenius"
    TABLE = "table"
    CUSTOM = "custom"


@dataclass(frozen=True)
class KineticsModel:
    """Immutable kinetic law with derived constants.

    Attributes
    ----------
    family : Family
        Parametrization used to build the law.
    V0 : float
        Upper speed bound (``g > -V0`` everywhere).
    v0 : float
        Lower speed bound, anchored as ``v0 = -g(0)``.
    A, u_inf : float
        Activation energy and temperature offset (Arrhenius only).
    lip_g : float
        Upper bound on ``|g'|`` over ``u >= 0``.
    nu0 : float
        Grid minimum of ``nu(V)`` over ``[-V0 + eps, -v0]``.
    nu0_argmin_speed : float
        Speed at which the ``nu`` minimum was attained.
    """

    family: Family
    V0: float
    v0: float
    A: Optional[float] = None
    u_inf: Optional[float] = None
    lip_g: float = 0.0
    nu0: float = 0.0
    nu0_argmin_speed: float = 0.0
    _g: Callable = field(repr=False, default=None)
    _gp: Callable = field(repr=False, default=None)
    _ginv: Callable = field(repr=False, default=None)

    # thin method façade over the module-level operations
    def g(self, u):
        return g_eval(self, u)

    def g_inverse(self, v):
        return g_inv(self, v)

    def gp(self, u):
        return g_prime(self, u)

    def nu(self, V):
        return nu_eval(self, V)

    def as_dict(self) -> dict:
        d = {"family": self.family.value, "V0": self.V0, "v0": self.v0,
             "lip_g": self.lip_g, "nu0": self.nu0}
        if self.family is Family.ARRHENIUS:
            d.update(A=self.A, u_inf=self.u_inf)
        return d

    def scalar_inverse_funcs(self):
        """Fast scalar (g_inv, nu) closures for tight solver loops."""
        if self.family is Family.ARRHENIUS:
            V0, A, u_inf, v0 = self.V0, self.A, self.u_inf, self.v0

            def ginv_s(v: float) -> float:
                if v >= -v0:
                    return 0.0
                return u_inf - A / math.log(-v / V0)

            def nu_s(v: float) -> float:
                lg = math.log(-v / V0)
                return -A / (v * lg * lg)

            return ginv_s, nu_s

        def ginv_gen(v: float) -> float:
            return float(g_inv(self, v))

        def nu_gen(v: float) -> float:
            return float(nu_eval(self, v))

        return ginv_gen, nu_gen


def g_eval(model: KineticsModel, u):
    """Front speed at temperature ``u >= 0``; value lies in ``[-V0, -v0]``."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise DomainError("kinetics g(u) requires u >= 0")
    out = model._g(u)
    return float(out) if out.ndim == 0 else out


def g_prime(model: KineticsModel, u):
    """Slope ``g'(u)``; negative and bounded below by ``-lip_g``."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise DomainError("kinetics g'(u) requires u >= 0")
    out = model._gp(u)
    return float(out) if out.ndim == 0 else out


def g_inv(model: KineticsModel, v):
    """Temperature at which the front moves with speed ``v``.

    ``v`` must lie in ``[-V0, -v0]``; the result satisfies
    ``g(g_inv(v)) = v`` to within ``1e-12``.
    """
    scalar = np.isscalar(v) or np.ndim(v) == 0
    varr = np.atleast_1d(np.asarray(v, dtype=float))
    if np.any(varr < -model.V0) or np.any(varr > -model.v0):
        raise RangeError(
            f"speed {v} outside attainable range [{-model.V0}, {-model.v0}]")
    out = model._ginv(varr)
    return float(out[0]) if scalar else out


def nu_eval(model: KineticsModel, V):
    """Kinetic sensitivity ``nu(V) = -(g^-1)'(V) > 0``.

    Defined for ``V`` in ``(-V0, -v0]``; blows up at the asymptote
    ``V = -V0``.
    """
    scalar = np.isscalar(V) or np.ndim(V) == 0
    varr = np.atleast_1d(np.asarray(V, dtype=float))
    if np.any(varr <= -model.V0):
        raise RangeError(
            "singular sensitivity: nu(V) diverges at and below V = -V0")
    if np.any(varr > -model.v0):
        raise RangeError(f"speed {V} above the slowest front speed {-model.v0}")
    u = model._ginv(varr)
    out = -1.0 / model._gp(u)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# constructors

def arrhenius(V0: float, A: float, u_inf: float) -> KineticsModel:
    """Arrhenius law ``g(u) = -V0 * exp(-A / (u - u_inf))`` with ``u_inf < 0``.

    The lower speed bound comes out automatically:
    ``v0 = -g(0) = V0 * exp(A / u_inf)``.
    """
    if V0 <= 0 or A <= 0:
        raise ParameterError("arrhenius kinetics needs V0 > 0 and A > 0")
    if u_inf >= 0:
        raise ParameterError("arrhenius kinetics needs u_inf < 0")

    def g(u):
        return -V0 * np.exp(-A / (u - u_inf))

    def gp(u):
        return g(u) * A / (u - u_inf) ** 2

    def ginv(v):
        # closed form: u = u_inf - A / ln(-v/V0); exact at v = -v0
        out = u_inf - A / np.log(-v / V0)
        return np.where(v == g(np.zeros_like(v)), 0.0, np.maximum(out, 0.0))

    # |g'| peaks at u - u_inf = A/2 when that point lies in u >= 0
    y_star = max(A / 2.0, -u_inf)
    lip = float(V0 * A * math.exp(-A / y_star) / y_star**2)

    return _finalize(Family.ARRHENIUS, V0, g, gp, ginv, lip, A=A, u_inf=u_inf)


def from_table(u_table, g_table, V0: float) -> KineticsModel:
    """Monotone-cubic kinetics from sampled ``(u, g(u))`` pairs.

    The table must start at ``u = 0`` (anchoring ``v0``), be strictly
    increasing in ``u`` and strictly decreasing in ``g``.  Beyond the last
    sample the law approaches ``-V0`` exponentially, matching value and
    slope at the joint; interpolated values are clamped to ``[-V0, -v0]``.
    """
    u_t = np.asarray(u_table, dtype=float)
    g_t = np.asarray(g_table, dtype=float)
    if u_t.ndim != 1 or u_t.shape != g_t.shape or u_t.size < 3:
        raise ParameterError("kinetics table needs >= 3 (u, g) rows")
    if u_t[0] != 0.0:
        raise ParameterError("kinetics table must start at u = 0")
    if np.any(np.diff(u_t) <= 0):
        raise ParameterError("kinetics table: u must be strictly increasing")
    if np.any(np.diff(g_t) >= 0):
        raise ParameterError("kinetics table: g must be strictly decreasing")
    if np.any(g_t >= 0) or np.any(g_t <= -V0):
        raise ParameterError("kinetics table values must lie in (-V0, 0)")

    pchip = PchipInterpolator(u_t, g_t, extrapolate=False)
    dpchip = pchip.derivative()
    u_max = float(u_t[-1])
    g_end = float(g_t[-1])
    gp_end = float(dpchip(u_max))
    if gp_end >= 0:
        gp_end = -1e-12 * V0  # flat table end; keep the tail decreasing
    decay = -gp_end / (V0 + g_end)  # V0 + g_end > 0

    v0_val = -g_t[0]

    def g(u):
        u = np.asarray(u, dtype=float)
        inside = u <= u_max
        out = np.empty_like(u)
        out[inside] = np.clip(pchip(u[inside]), -V0, -v0_val)
        tail = ~inside
        out[tail] = -V0 + (V0 + g_end) * np.exp(-decay * (u[tail] - u_max))
        return out

    def gp(u):
        u = np.asarray(u, dtype=float)
        inside = u <= u_max
        out = np.empty_like(u)
        out[inside] = np.minimum(dpchip(u[inside]), 0.0)
        tail = ~inside
        out[tail] = -decay * (V0 + g_end) * np.exp(-decay * (u[tail] - u_max))
        return out

    ginv = _bisection_inverse(g, u_max)
    lip = float(np.max(np.abs(dpchip(np.linspace(0.0, u_max, AUDIT_POINTS)))))
    return _finalize(Family.TABLE, V0, g, gp, ginv, lip)


def custom(g_func: Callable, V0: float, gprime: Optional[Callable] = None,
           ginv: Optional[Callable] = None) -> KineticsModel:
    """Wrap a user-supplied decreasing law ``g`` with bound ``V0``."""

    def g(u):
        return np.asarray(g_func(np.asarray(u, dtype=float)), dtype=float)

    if gprime is None:
        def gp(u):
            u = np.asarray(u, dtype=float)
            h = 1e-6 * np.maximum(1.0, np.abs(u))
            lo = np.maximum(u - h, 0.0)
            return (g(u + h) - g(lo)) / (u + h - lo)
    else:
        def gp(u):
            return np.asarray(gprime(np.asarray(u, dtype=float)), dtype=float)

    inv = ginv if ginv is not None else _bisection_inverse(g, 1.0)
    u_audit = np.linspace(0.0, AUDIT_U_MAX, AUDIT_POINTS)
    lip = float(np.max(np.abs(gp(u_audit))))
    return _finalize(Family.CUSTOM, V0, g, gp, inv, lip)


def _bisection_inverse(g, u_scale):
    """Safeguarded root-bracketing inverse for non-closed-form laws."""

    def ginv(v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        out = np.empty_like(v)
        g0 = float(g(np.array(0.0)))
        for i, vi in enumerate(v):
            if vi >= g0:
                out[i] = 0.0
                continue
            hi = max(u_scale, 1.0)
            while float(g(np.array(hi))) > vi:
                hi *= 2.0
                if hi > 1e12:
                    raise RangeError(f"speed {vi} not attained by this kinetics")
            out[i] = brentq(lambda u: float(g(np.array(u))) - vi, 0.0, hi,
                            xtol=1e-15, rtol=8.9e-16)
        return out

    return ginv


def _finalize(family, V0, g, gp, ginv, lip, A=None, u_inf=None) -> KineticsModel:
    v0 = float(-g(np.array(0.0)))
    if not 0.0 < v0 < V0:
        raise ParameterError(f"derived v0 = {v0} must lie in (0, V0 = {V0})")

    # construction-time audit on [0, AUDIT_U_MAX]
    u_audit = np.linspace(0.0, AUDIT_U_MAX, AUDIT_POINTS)
    g_audit = g(u_audit)
    if np.any(g_audit < -V0) or np.any(g_audit > -v0 + 1e-14 * V0):
        raise ParameterError("kinetics audit: g leaves [-V0, -v0] on [0, 100]")
    # non-increasing at double precision; laws hugging the asymptote may tie
    if np.any(np.diff(g_audit) > 0):
        raise ParameterError("kinetics audit: g is not decreasing")

    # nu0 = grid minimum of the sensitivity over the attainable speeds
    eps_nu = 1e-3 * (V0 - v0)
    speeds = np.linspace(-V0 + eps_nu, -v0, NU_GRID_POINTS)
    u_at = ginv(speeds)
    nu_vals = -1.0 / gp(u_at)
    if np.any(nu_vals <= 0):
        raise ParameterError("kinetics audit: nu(V) must be positive")
    k = int(np.argmin(nu_vals))
    return KineticsModel(family=family, V0=float(V0), v0=v0, A=A, u_inf=u_inf,
                         lip_g=float(lip), nu0=float(nu_vals[k]),
                         nu0_argmin_speed=float(speeds[k]),
                         _g=g, _gp=gp, _ginv=ginv)
