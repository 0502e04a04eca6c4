"""Explicit constants of the estimates and audits of runs against them.

Every bound is a parameter-only formula: the weight thresholds
``alpha_space``, ``alpha_time``, ``alpha_min'``, the absorbing radius
``V0 / sqrt(gamma)``, the derivative bound, its L2 consequence, the
optimized trace bound ``mu`` and the closed-form dimension bound.  Audits
measure weighted norms of reconstructed fields along a run and compare with
5% discretization slack; a failing audit only counts as a genuine violation
if it persists at doubled resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError
from .interface_solver import FrontHistory
from .params import ProblemParams
from .spaces import (GridField, WeightSpec, c_alpha_norm, derivative_field,
                     embedding_check)

__all__ = ["ConstantsTable", "compute_constants", "RunArtifacts",
           "EstimateAudit", "BoundsReport", "verify_apriori",
           "confirm_violations"]

DEFAULT_SLACK = 0.05
SLOPE_SLACK = 1e-2


@dataclass(frozen=True)
class ConstantsTable:
    """Parameter-only constants; see :func:`compute_constants`."""

    alpha_space: float
    alpha_time: float
    alpha_min: float
    alpha_min_prime: float
    absorb_radius: float
    deriv_bound: float
    n_bound: float
    mu: float
    mu_argmin_a: float
    m_dim: float
    mu_over_gamma: float
    alpha_min_branch: str

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "alpha_space", "alpha_time", "alpha_min", "alpha_min_prime",
            "absorb_radius", "deriv_bound", "n_bound", "mu", "mu_argmin_a",
            "m_dim", "mu_over_gamma", "alpha_min_branch")}


def _golden_min(f: Callable[[float], float], lo: float, hi: float,
                tol: float = 1e-12) -> float:
    """Golden-section minimizer of a unimodal function on [lo, hi] (log scale)."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(math.exp(d))
    return math.exp(0.5 * (a + b))


def compute_constants(params: ProblemParams) -> ConstantsTable:
    """Evaluate the full constants table from the problem parameters."""
    kin = params.kinetics
    gamma = params.gamma
    v0, V0, nu0 = kin.v0, kin.V0, kin.nu0

    a_space = min(v0 / 4.0, gamma / (2.0 * V0))
    a_time = 0.5 * V0 * (math.sqrt(1.0 + 4.0 * gamma / V0**2) - 1.0)
    a_min = min(a_time, a_space)
    branch = ("tie" if a_time == a_space
              else ("time" if a_time < a_space else "space"))
    a_min_prime = min(v0 / 8.0, gamma / (2.0 * V0))

    absorb_radius = V0 / math.sqrt(gamma)
    deriv_bound = V0 * max(8.0 / (math.e * v0),
                           0.5 * (1.0 + V0 / v0) * math.exp(a_min_prime),
                           2.0 / math.sqrt(gamma) + 6.0)
    n_bound = deriv_bound / math.sqrt(a_min_prime)

    c = 4.0 * nu0 * nu0
    B = 0.5 * n_bound * n_bound

    def h(a):
        return ((2.0 * nu0 + a) / c) ** 2 + B / a

    a_star = _golden_min(h, 1e-12, 1e12)
    mu = -gamma + h(a_star)
    m_dim = (((2.0 * nu0 + 1.0) / c) ** 2 + B) / gamma
    mu_over_gamma = mu / gamma
    if mu_over_gamma > m_dim:
        raise ParameterError("optimized dimension bound exceeds the closed form")
    return ConstantsTable(
        alpha_space=a_space, alpha_time=a_time, alpha_min=a_min,
        alpha_min_prime=a_min_prime, absorb_radius=absorb_radius,
        deriv_bound=deriv_bound, n_bound=n_bound, mu=mu, mu_argmin_a=a_star,
        m_dim=m_dim, mu_over_gamma=mu_over_gamma, alpha_min_branch=branch)


# ---------------------------------------------------------------------------
# run audits

@dataclass
class RunArtifacts:
    """Reconstructed snapshots of one run, ready for norm audits."""

    u0: GridField
    history: FrontHistory
    snapshot_times: list
    t1_parts: dict
    t2_parts: dict
    fields: dict


@dataclass
class EstimateAudit:
    estimate_id: str
    paper_eq: str
    bound: float
    measured_max: float
    margin: float
    passed: bool
    at_time: Optional[float] = None

    def as_dict(self) -> dict:
        return {"estimate_id": self.estimate_id, "paper_eq": self.paper_eq,
                "bound": float(self.bound),
                "measured_max": float(self.measured_max),
                "margin": float(self.margin), "pass": bool(self.passed),
                "at_time": None if self.at_time is None else float(self.at_time)}


@dataclass
class BoundsReport:
    alpha: float
    slack: float
    audits: list

    @property
    def all_pass(self) -> bool:
        return all(bool(a.passed) for a in self.audits)

    def failed_ids(self) -> list:
        return [a.estimate_id for a in self.audits if not a.passed]

    def by_id(self, estimate_id: str) -> EstimateAudit:
        for a in self.audits:
            if a.estimate_id == estimate_id:
                return a
        raise KeyError(estimate_id)

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "slack": self.slack,
                "all_pass": self.all_pass,
                "audits": [a.as_dict() for a in self.audits]}


def _worst(times, measured, bounds):
    ratios = [m / b if b > 0 else math.inf for m, b in zip(measured, bounds)]
    k = int(np.argmax(ratios))
    return times[k], measured[k], bounds[k], ratios[k]


def verify_apriori(artifacts: RunArtifacts, table: ConstantsTable,
                   alpha: float, gamma: float,
                   slack: float = DEFAULT_SLACK) -> BoundsReport:
    """Audit one run against the uniform and decay estimates.

    ``alpha`` must lie below ``alpha_min``; the derivative bound is audited
    only when ``alpha < alpha_min_prime`` additionally holds.
    """
    if not 0.0 <= alpha < table.alpha_min:
        raise ParameterError(
            f"alpha = {alpha} outside [0, alpha_min = {table.alpha_min}); "
            "the solution estimates do not apply")
    w = WeightSpec(alpha)
    u0_norm = c_alpha_norm(artifacts.u0, w)
    V0 = table.absorb_radius * math.sqrt(gamma)
    kappa = -gamma + alpha * alpha + alpha * V0  # initial-data decay exponent
    times = [t for t in artifacts.snapshot_times if t > 0]
    audits = []

    # free-interface part stays inside the absorbing radius
    m_t1 = [c_alpha_norm(artifacts.t1_parts[t], w) for t in times]
    t_star, meas, bnd, _ = _worst(times, m_t1, [table.absorb_radius] * len(times))
    audits.append(EstimateAudit(
        "t1_uniform_bound", "T1-solution", bnd, meas,
        bnd * (1 + slack) - meas, meas <= bnd * (1 + slack), t_star))

    # initial-data part decays at the predicted exponential rate (level form)
    m_t2 = [c_alpha_norm(artifacts.t2_parts[t], w) for t in times]
    b_t2 = [2.0 * math.exp(kappa * t) * u0_norm for t in times]
    if u0_norm == 0.0:
        audits.append(EstimateAudit(
            "t2_decay_level", "T2-solution", 0.0, float(max(m_t2, default=0.0)),
            0.0, max(m_t2, default=0.0) == 0.0, None))
    else:
        t_star, meas, bnd, _ = _worst(times, m_t2, b_t2)
        audits.append(EstimateAudit(
            "t2_decay_level", "T2-solution", bnd, meas,
            bnd * (1 + slack) - meas, meas <= bnd * (1 + slack), t_star))

        # measured decay slope of log |T2|_alpha
        pos = [(t, n) for t, n in zip(times, m_t2) if n > 1e-290]
        if len(pos) >= 2:
            tt = np.array([p[0] for p in pos])
            ln = np.log([p[1] for p in pos])
            slope = float(np.polyfit(tt, ln, 1)[0])
            bound_slope = kappa + SLOPE_SLACK
            audits.append(EstimateAudit(
                "t2_decay_slope", "T2-solution", bound_slope, slope,
                bound_slope - slope, slope <= bound_slope, None))

    # absorbing estimate for the full field
    m_full = [c_alpha_norm(artifacts.fields[t], w) for t in times]
    b_full = [table.absorb_radius + 2.0 * math.exp(kappa * t) * u0_norm
              for t in times]
    t_star, meas, bnd, _ = _worst(times, m_full, b_full)
    audits.append(EstimateAudit(
        "absorbing_bound", "absorb", bnd, meas,
        bnd * (1 + slack) - meas, meas <= bnd * (1 + slack), t_star))

    # derivative bound (needs the stricter weight threshold)
    if alpha < table.alpha_min_prime:
        m_dx = [c_alpha_norm(derivative_field(artifacts.fields[t]).field, w)
                for t in times]
        b_dx = [table.deriv_bound
                + u0_norm * (2.0 / math.sqrt(t * math.pi) + 0.5 * alpha)
                * math.exp(kappa * t) for t in times]
        t_star, meas, bnd, _ = _worst(times, m_dx, b_dx)
        audits.append(EstimateAudit(
            "derivative_bound", "c1alpha", bnd, meas,
            bnd * (1 + slack) - meas, meas <= bnd * (1 + slack), t_star))

    # weighted-norm embedding inequality on every reconstructed field
    worst_gap, worst_t = -math.inf, None
    for t in times:
        rep = embedding_check(artifacts.fields[t], alpha=alpha, beta=0.5 * alpha)
        gap = rep.lhs - rep.rhs
        if gap > worst_gap:
            worst_gap, worst_t = gap, t
    audits.append(EstimateAudit(
        "embedding", "beta-alpha", 0.0, worst_gap, -worst_gap,
        worst_gap <= 1e-8, worst_t))

    return BoundsReport(alpha=alpha, slack=slack, audits=audits)


def confirm_violations(report: BoundsReport,
                       rerun: Callable[[int], BoundsReport]) -> list:
    """Anti-false-positive rule for failed audits.

    A failed estimate counts as genuine only if it also fails when the run
    is repeated at doubled resolution (``rerun(2)`` must produce the refined
    report).  Returns the confirmed estimate ids (empty when everything
    passed).
    """
    failed = report.failed_ids()
    if not failed:
        return []
    refined = rerun(2)
    refined_failed = set(refined.failed_ids())
    return [e for e in failed if e in refined_failed]
