"""Top-level problem description: heat loss, kinetics, grid and solver knobs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ParameterError
from .kinetics import KineticsModel
from .spaces import GridField, SpatialGrid

__all__ = ["SolverConfig", "ProblemParams"]


@dataclass(frozen=True)
class SolverConfig:
    """Time-marching knobs for the memory-integral velocity solver."""

    dt: float
    picard_tol: float = 1e-10
    max_picard_iters: int = 50
    quad_points: int = 3
    initial_data: Optional[GridField] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError("dt must be positive")
        if self.picard_tol <= 0 or self.max_picard_iters < 1:
            raise ParameterError("bad fixed-point iteration settings")

    def contraction_factor(self, lip_g: float) -> float:
        # the final-panel kernel weight is <= sqrt(dt / pi)
        return math.sqrt(self.dt / math.pi) * lip_g


@dataclass(frozen=True)
class ProblemParams:
    """Heat-loss coefficient, kinetic law and discretization settings."""

    gamma: float
    kinetics: KineticsModel
    grid: SpatialGrid
    solver: SolverConfig

    def __post_init__(self):
        if self.gamma <= 0:
            raise ParameterError("heat-loss coefficient gamma must be > 0")
        rho = self.solver.contraction_factor(self.kinetics.lip_g)
        if rho >= 1.0:
            raise ParameterError(
                f"dt = {self.solver.dt} too large: final-panel weight times "
                f"the kinetic slope bound is {rho:.3f} >= 1 (no contraction)")

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "kinetics": self.kinetics.as_dict(),
            "grid": {"L": self.grid.L, "n_minus": self.grid.n_minus,
                     "n_plus": self.grid.n_plus},
            "solver": {"dt": self.solver.dt,
                       "picard_tol": self.solver.picard_tol,
                       "max_picard_iters": self.solver.max_picard_iters,
                       "quad_points": self.solver.quad_points},
        }
