"""Densities on (0, 1] sampled at the nodes of a graded grid.

Between nodes a density is read through a piecewise interpolant: a local power
law (linear in log-log coordinates) on cells below the interpolation switch,
linear above it, and on the first cell (0, x_1] the power law through
(x_1, x_2) extended to 0. Quadrature is the exact integral of that interpolant,
so power laws such as x^-gamma, constants and affine data integrate without
discretisation error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from ..core.errors import DensityError, InterpolationError
from ..core.models import MapFamily
from ..core.policies import build_grid_policy
from .grid import GradedGrid

logger = logging.getLogger(__name__)

_LINEAR, _POWER, _FIRST_POWER = 0, 1, 2
_DOMAIN_SLACK = 1e-12


def _default_switch() -> float:
    return build_grid_policy().interpolation_switch


@dataclass(frozen=True, eq=False)
class Density:
    grid: GradedGrid
    values: np.ndarray
    interpolation_switch: float = field(default_factory=_default_switch)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_cells,):
            raise DensityError(f"expected {self.grid.n_cells} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DensityError("density values must be finite")
        if np.any(values < 0):
            worst = int(np.argmin(values))
            raise DensityError(f"negative density value {values[worst]:.3e} at x={self.grid.points[worst]:.6g}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    @property
    def tail_exponent_model(self) -> float | None:
        """Local exponent p of v(x) ~ x^p fitted through (x_1, v_1), (x_2, v_2); None if a value is 0."""
        v1, v2 = self.values[0], self.values[1]
        if v1 <= 0 or v2 <= 0:
            return None
        x1, x2 = self.points[0], self.points[1]
        return float(np.log(v2 / v1) / np.log(x2 / x1))

    @cached_property
    def _cells(self) -> _CellModel:
        return _CellModel.build(self)

    def with_values(self, values: np.ndarray) -> Density:
        return Density(self.grid, values, self.interpolation_switch)


@dataclass(frozen=True)
class _CellModel:
    """Per-cell description of the interpolant; cell k spans [nodes[k], nodes[k + 1]]."""

    x_lo: np.ndarray
    x_hi: np.ndarray
    v_lo: np.ndarray
    v_hi: np.ndarray
    exponent: np.ndarray
    mode: np.ndarray

    @classmethod
    def build(cls, d: Density) -> _CellModel:
        nodes = d.grid.nodes
        v = d.values
        x_lo = nodes[:-1].copy()
        x_hi = nodes[1:].copy()
        v_lo = np.concatenate(([v[0]], v[:-1]))
        v_hi = v.copy()
        mode = np.full(v.size, _LINEAR)
        exponent = np.zeros(v.size)

        positive = (v_lo > 0) & (v_hi > 0)
        power = positive & (x_hi <= d.interpolation_switch)
        power[0] = False
        with np.errstate(divide="ignore", invalid="ignore"):
            exponent[power] = np.log(v_hi[power] / v_lo[power]) / np.log(x_hi[power] / x_lo[power])
        mode[power] = _POWER

        first = d.tail_exponent_model
        if first is not None:
            mode[0] = _FIRST_POWER
            exponent[0] = first
        return cls(x_lo=x_lo, x_hi=x_hi, v_lo=v_lo, v_hi=v_hi, exponent=exponent, mode=mode)

    def partial_integral(self, k: np.ndarray, x: np.ndarray, *, strict: bool = True) -> np.ndarray:
        """Integral of the interpolant over [nodes[k], x] for x inside cell k."""
        x_lo, x_hi = self.x_lo[k], self.x_hi[k]
        v_lo, v_hi = self.v_lo[k], self.v_hi[k]
        mode = self.mode[k]
        q = self.exponent[k] + 1.0

        if strict and np.any((mode == _FIRST_POWER) & (q <= 0)):
            raise DensityError(
                f"non-integrable tail model on (0, x_1]: fitted exponent {self.exponent[0]:.4f} <= -1"
            )

        t = x - x_lo
        h = x_hi - x_lo
        result = v_lo * t + (v_hi - v_lo) * t * t / (2.0 * h)

        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            log_ratio = np.log(x / x_lo)
            qL = q * log_ratio
            power = np.where(
                np.abs(qL) < 1e-12,
                v_lo * x_lo * log_ratio * (1.0 + 0.5 * qL),
                v_lo * x_lo * np.expm1(qL) / q,
            )
            first = v_lo * x_hi * (x / x_hi) ** q / q
        result = np.where(mode == _POWER, power, result)
        first_ok = (mode == _FIRST_POWER) & (q > 0)
        result = np.where(first_ok, first, result)
        lenient = (mode == _FIRST_POWER) & ~(q > 0)
        # Non-integrable first-cell model in lenient mode: hold v_1 constant.
        if np.any(lenient):
            logger.debug("first-cell exponent %.4f <= -1, holding v_1 constant", self.exponent[0])
        result = np.where(lenient, v_lo * t, result)
        return result

    def cell_integrals(self, *, strict: bool = True) -> np.ndarray:
        k = np.arange(self.x_lo.size)
        return self.partial_integral(k, self.x_hi, strict=strict)


def quadrature(d: Density, *, strict: bool = True) -> float:
    return float(np.sum(d._cells.cell_integrals(strict=strict)))


def normalize(d: Density) -> Density:
    mass = quadrature(d)
    if not np.isfinite(mass) or mass <= 0:
        raise DensityError(f"cannot normalise a density with mass {mass!r}")
    return d.with_values(d.values / mass)


def l1_distance(f: Density, g: Density) -> float:
    if f.grid != g.grid:
        raise DensityError(f"grid mismatch: {f.grid} vs {g.grid}")
    difference = Density(f.grid, np.abs(f.values - g.values), f.interpolation_switch)
    return quadrature(difference, strict=False)


def _locate(grid: GradedGrid, y: np.ndarray) -> np.ndarray:
    if np.any(~np.isfinite(y)) or np.any(y <= 0) or np.any(y > 1.0 + _DOMAIN_SLACK):
        bad = y[~(np.isfinite(y) & (y > 0) & (y <= 1.0 + _DOMAIN_SLACK))]
        raise InterpolationError(f"interpolation point {float(bad[0])!r} outside (0, 1]")
    cells = np.searchsorted(grid.nodes, y, side="left") - 1
    return np.clip(cells, 0, grid.n_cells - 1)


def interpolation_weights(d: Density, y) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(lo, hi, w_lo, w_hi) with interpolate(d, y) = w_lo * v[lo] + w_hi * v[hi].

    On power-law cells the weights are the Euler weights of the 1-homogeneous
    map (v_lo, v_hi) -> v_lo^(1-t) v_hi^t, evaluated at the current values.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    cells = d._cells
    k = _locate(d.grid, y)
    points = d.points
    lo = np.maximum(k - 1, 0)
    hi = np.where(k == 0, 1, k)
    mode = cells.mode[k]

    x_lo, x_hi = cells.x_lo[k], cells.x_hi[k]
    with np.errstate(divide="ignore", invalid="ignore"):
        linear_theta = np.where(k == 0, 0.0, (y - x_lo) / (x_hi - x_lo))
        power_theta = np.log(y / x_lo) / np.log(x_hi / x_lo)
        first_theta = np.log(y / points[0]) / np.log(points[1] / points[0])
    theta = np.where(mode == _POWER, power_theta, linear_theta)
    theta = np.where(mode == _FIRST_POWER, first_theta, theta)

    w_lo = 1.0 - theta
    w_hi = theta.copy()
    curved = mode != _LINEAR
    if np.any(curved):
        v = d.values
        ratio = v[hi[curved]] / v[lo[curved]]
        t = theta[curved]
        w_lo[curved] = (1.0 - t) * ratio**t
        w_hi[curved] = t * ratio ** (t - 1.0)
    return lo, hi, w_lo, w_hi


def interpolate(d: Density, y) -> float | np.ndarray:
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    cells = d._cells
    k = _locate(d.grid, y)
    v = d.values
    points = d.points
    lo = np.maximum(k - 1, 0)
    hi = np.where(k == 0, 1, k)
    mode = cells.mode[k]
    x_lo, x_hi = cells.x_lo[k], cells.x_hi[k]

    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(k == 0, 0.0, (y - x_lo) / (x_hi - x_lo))
        result = (1.0 - theta) * v[lo] + theta * v[hi]
        power = v[lo] * (v[hi] / v[lo]) ** (np.log(y / x_lo) / np.log(x_hi / x_lo))
        first = v[0] * (y / points[0]) ** cells.exponent[0]
    result = np.where(mode == _POWER, power, result)
    result = np.where(mode == _FIRST_POWER, first, result)
    if scalar:
        return float(result[0])
    return result


def cumulative(d: Density, x) -> float | np.ndarray:
    """Integral of d over (0, x], exact for the interpolant."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0) or np.any(x > 1.0 + _DOMAIN_SLACK):
        raise InterpolationError(f"cumulative point outside [0, 1]: {x.min()!r}..{x.max()!r}")
    cells = d._cells
    at_nodes = cumulative_at_nodes(d)
    result = np.zeros_like(x)
    inside = x > 0
    if np.any(inside):
        k = _locate(d.grid, x[inside])
        result[inside] = at_nodes[k] + cells.partial_integral(k, x[inside], strict=False)
    if scalar:
        return float(result[0])
    return result


def cumulative_at_nodes(d: Density) -> np.ndarray:
    """[F(x_0), F(x_1), ..., F(x_n)] with F(x_0) = 0."""
    return np.concatenate(([0.0], np.cumsum(d._cells.cell_integrals(strict=False))))


_KERNELS: dict[MapFamily, tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray] | None]] = {
    MapFamily.COUPLED_PM: (lambda x: np.sin(2.0 * np.pi * x), lambda x: np.cos(2.0 * np.pi * x)),
    MapFamily.REMARK_PM: (lambda x: np.sin(np.pi * x), None),
}


def coupling_functionals(d: Density, family: MapFamily | str) -> tuple[float, float]:
    """(s_h, c_h): integrals of h against the family's sine/cosine kernels.

    Uses the trapezoid weights of the grid, so the functionals are linear in
    the sampled values.
    """
    family = MapFamily(family)
    sine, cosine = _KERNELS[family]
    weighted = d.grid.trapezoid_weights * d.values
    s_h = float(np.dot(weighted, sine(d.points)))
    c_h = float(np.dot(weighted, cosine(d.points))) if cosine is not None else 0.0
    return s_h, c_h


def tail_sup(d: Density, gamma: float) -> float:
    """sup over nodes of d(x) x^gamma."""
    return float(np.max(d.values * d.points**gamma))


def from_function(grid: GradedGrid, func: Callable[[np.ndarray], np.ndarray]) -> Density:
    return Density(grid, np.asarray(func(grid.points), dtype=float))


def constant_density(grid: GradedGrid) -> Density:
    return Density(grid, np.ones(grid.n_cells))


def reference_density(grid: GradedGrid, gamma: float) -> Density:
    """(1 - gamma) x^-gamma, the extremal member of the tail cones."""
    return from_function(grid, lambda x: (1.0 - gamma) * x**-gamma)


def monomial_density(grid: GradedGrid, degree: int) -> Density:
    """(degree + 1) x^degree; degree 1 gives 2x, degree 2 gives 3x^2."""
    return from_function(grid, lambda x: (degree + 1.0) * x**degree)
