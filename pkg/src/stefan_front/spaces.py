"""Front-attached grids, exponentially weighted norms, and discrete derivatives.

The working domain is the truncated line ``[-L, L]`` in the coordinate
attached to the moving interface.  The node at 0 is stored twice (left and
right limits) so that a temperature field can carry a derivative jump while
staying continuous in value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GridError, ParameterError

__all__ = [
    "SpatialGrid",
    "GridField",
    "WeightSpec",
    "EmbeddingReport",
    "FieldDerivative",
    "c_alpha_norm",
    "h_beta_norm",
    "embedding_check",
    "derivative_field",
]

CONTINUITY_ATOL = 1e-10
WEIGHT_SCALE_FACTOR = 10.0  # require L >= 10 / alpha for weighted norms


class SpatialGrid:
    """Symmetric truncated grid with a duplicated node at the interface.

    Nodes run ``-L = x[0] < ... < x[i0_left] = 0 = x[i0_right] < ... = L``.
    """

    def __init__(self, L: float, n_minus: int, n_plus: int):
        if L <= 0:
            raise GridError("half length L must be positive")
        if n_minus < 1 or n_plus < 1:
            raise GridError("need at least one panel per side")
        self.L = float(L)
        self.n_minus = int(n_minus)
        self.n_plus = int(n_plus)
        left = np.linspace(-self.L, 0.0, self.n_minus + 1)
        right = np.linspace(0.0, self.L, self.n_plus + 1)
        self.x = np.concatenate([left, right])
        self.x.setflags(write=False)
        self.i0_left = self.n_minus
        self.i0_right = self.n_minus + 1
        self.size = self.x.size
        self.left = slice(0, self.i0_left + 1)
        self.right = slice(self.i0_right, self.size)
        self.dx_left = self.L / self.n_minus
        self.dx_right = self.L / self.n_plus

    @classmethod
    def uniform(cls, L: float, dx: float) -> "SpatialGrid":
        n = int(round(L / dx))
        if n < 1 or abs(n * dx - L) > 1e-9 * max(1.0, L):
            raise GridError(f"dx = {dx} does not tile half length L = {L}")
        return cls(L, n, n)

    @property
    def dx(self) -> float:
        if abs(self.dx_left - self.dx_right) > 1e-12 * self.L:
            raise GridError("grid spacing differs between sides")
        return self.dx_left

    def __eq__(self, other):
        return (isinstance(other, SpatialGrid) and self.L == other.L
                and self.n_minus == other.n_minus and self.n_plus == other.n_plus)

    def __repr__(self):
        return f"SpatialGrid(L={self.L}, n_minus={self.n_minus}, n_plus={self.n_plus})"


@dataclass(frozen=True)
class WeightSpec:
    """Exponential weight exp(alpha * |x|) with alpha >= 0."""

    alpha: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ParameterError("weight exponent alpha must be >= 0")


class GridField:
    """Immutable field sampled on a :class:`SpatialGrid`.

    The two interface samples must agree in value (the temperature is
    continuous; only its derivative may jump).
    """

    def __init__(self, grid: SpatialGrid, values, continuous: bool = True):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.size,):
            raise GridError(
                f"field has {values.shape} values for a grid of size {grid.size}")
        if not np.all(np.isfinite(values)):
            raise GridError("field contains non-finite values")
        if continuous:
            scale = max(1.0, float(np.max(np.abs(values))))
            gap = abs(values[grid.i0_left] - values[grid.i0_right])
            if gap > CONTINUITY_ATOL * scale:
                raise GridError(
                    f"field is discontinuous at the interface (gap {gap:.3e})")
        self.grid = grid
        self.values = values.copy()
        self.values.setflags(write=False)

    @classmethod
    def from_function(cls, grid: SpatialGrid, func: Callable) -> "GridField":
        return cls(grid, func(grid.x))

    @classmethod
    def zero(cls, grid: SpatialGrid) -> "GridField":
        return cls(grid, np.zeros(grid.size))

    def value_at_interface(self) -> float:
        return float(self.values[self.grid.i0_left])

    def __mul__(self, c: float) -> "GridField":
        return GridField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: "GridField") -> "GridField":
        if other.grid != self.grid:
            raise GridError("fields live on different grids")
        return GridField(self.grid, self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        return self + (-1.0) * other


@dataclass(frozen=True)
class EmbeddingReport:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class FieldDerivative:
    field: GridField
    jump_at_zero: float


def _check_weight_scale(grid: SpatialGrid, alpha: float):
    if alpha > 0 and grid.L < WEIGHT_SCALE_FACTOR / alpha - 1e-12:
        raise ParameterError(
            f"grid half length {grid.L} too short for weight alpha={alpha}; "
            f"need L >= {WEIGHT_SCALE_FACTOR / alpha}")


def _weighted_abs(field: GridField, alpha: float) -> np.ndarray:
    """exp(alpha|x|) * |f| computed in log space to dodge overflow."""
    af = np.abs(field.values)
    out = np.zeros_like(af)
    mask = af > 0
    if mask.any():
        logs = alpha * np.abs(field.grid.x[mask]) + np.log(af[mask])
        out[mask] = np.exp(logs)
    return out


def c_alpha_norm(field: GridField, weight: WeightSpec) -> float:
    """Weighted sup norm: max over nodes of ``exp(alpha |x|) |f(x)|``."""
    _check_weight_scale(field.grid, weight.alpha)
    w = _weighted_abs(field, weight.alpha)
    return float(np.max(w)) if w.size else 0.0


def h_beta_norm(field: GridField, weight: WeightSpec) -> float:
    """Weighted L2 norm ``(int exp(2 beta |x|) f^2 dx)^(1/2)`` by trapezoid."""
    _check_weight_scale(field.grid, weight.alpha)
    w = _weighted_abs(field, weight.alpha)
    return float(np.sqrt(np.trapezoid(w * w, field.grid.x)))


def embedding_check(field: GridField, alpha: float, beta: float) -> EmbeddingReport:
    """Check ``||f||_beta <= |f|_alpha / sqrt(alpha - beta)`` (needs beta < alpha)."""
    if beta >= alpha:
        raise ParameterError("embedding estimate requires beta < alpha")
    lhs = h_beta_norm(field, WeightSpec(beta))
    rhs = c_alpha_norm(field, WeightSpec(alpha)) / np.sqrt(alpha - beta)
    return EmbeddingReport(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + 1e-8))


def derivative_field(field: GridField) -> FieldDerivative:
    """One-sided spatial derivative with the jump at the interface exposed.

    Central differences in the interior of each side, second-order one-sided
    stencils at the interface and the outer boundaries.
    """
    grid = field.grid
    if grid.n_minus < 2 or grid.n_plus < 2:
        raise GridError("derivative needs at least 3 nodes per side")
    d = np.empty(grid.size)
    d[grid.left] = np.gradient(field.values[grid.left], grid.x[grid.left],
                               edge_order=2)
    d[grid.right] = np.gradient(field.values[grid.right], grid.x[grid.right],
                                edge_order=2)
    jump = float(d[grid.i0_right] - d[grid.i0_left])
    # the derivative carries the jump: skip the continuity check
    return FieldDerivative(field=GridField(grid, d, continuous=False),
                           jump_at_zero=jump)
