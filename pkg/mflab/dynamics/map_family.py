"""Coupled Pomeau-Manneville map families and their branch structure.

Both families are two-branch full-branch increasing maps of the unit interval:

    CoupledPM:  T(x) = x (1 + x^(g* + eps s_h)) + eps c_h x^2 (1 - x)   mod 1
    RemarkPM:   T(x) = x (1 + x^g*) + eps s_h x (1 - x)               mod 1

Everything is expressed through the lifted map F on [0, 1] with F(0) = 0,
F(x*) = 1 and F(1) = 2; the left branch is [0, x*], the right one [x*, 1].
"""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P
from pydantic import BaseModel, ValidationError, model_validator

from ..core.errors import SpecValidationError
from ..core.models import Branch, MapFamily
from ..core.policies import RootPolicy, build_root_policy

logger = logging.getLogger(__name__)

MAX_ORDER = 4

# Polynomial perturbation shapes, lowest degree first, multiplied by eps * coupling.
_PERTURBATION_SHAPES = {
    MapFamily.COUPLED_PM: np.array([0.0, 0.0, 1.0, -1.0]),
    MapFamily.REMARK_PM: np.array([0.0, 1.0, -1.0]),
}


class MapSpec(BaseModel):
    family: MapFamily
    gamma_star: float
    epsilon: float
    s_h: float = 0.0
    c_h: float = 0.0
    branch_boundary: float | None = None

    @property
    def exponent(self) -> float:
        """Effective exponent of the indifferent fixed point."""
        if self.family is MapFamily.COUPLED_PM:
            return self.gamma_star + self.epsilon * self.s_h
        return self.gamma_star

    @property
    def perturbation(self) -> float:
        """Coefficient of the polynomial perturbation term."""
        if self.family is MapFamily.COUPLED_PM:
            return self.epsilon * self.c_h
        return self.epsilon * self.s_h

    @property
    def cache_key(self) -> tuple[str, float, float]:
        return (self.family.value, self.exponent, self.perturbation)

    @property
    def boundary(self) -> float:
        assert self.branch_boundary is not None
        return self.branch_boundary

    @model_validator(mode="after")
    def _validate(self) -> MapSpec:
        if not 0.0 < self.gamma_star < 1.0:
            raise ValueError(f"gamma_star={self.gamma_star} must lie in (0, 1)")
        if self.family is MapFamily.REMARK_PM and self.epsilon < 0:
            raise ValueError("the remark family is only defined for epsilon >= 0")
        if not 0.0 < self.exponent < 1.0:
            raise ValueError(f"effective exponent {self.exponent:.6g} left (0, 1)")
        probe = np.linspace(0.0, 1.0, 257)[1:]
        if np.any(lifted_derivative(self, probe, 1) <= 1.0):
            raise ValueError("lifted map is not uniformly expanding away from 0")
        if self.branch_boundary is None:
            self.branch_boundary = solve_branch_boundary(self)
        return self


def build_map_spec(
    family: MapFamily | str,
    gamma_star: float,
    epsilon: float,
    s_h: float = 0.0,
    c_h: float = 0.0,
) -> MapSpec:
    """Validated MapSpec; pydantic failures surface as SpecValidationError."""
    family = MapFamily(family)
    if family is MapFamily.REMARK_PM:
        c_h = 0.0
    try:
        return MapSpec(family=family, gamma_star=gamma_star, epsilon=epsilon, s_h=s_h, c_h=c_h)
    except ValidationError as exc:
        messages = "; ".join(str(error.get("msg", "")) for error in exc.errors())
        raise SpecValidationError(messages) from exc


def gamma_bounds(gamma_star: float, eps_star: float) -> tuple[float, float]:
    """(gamma_minus, gamma_plus) = (g* - 2 eps*, g* + 2 eps*), both inside (0, 1)."""
    gamma_minus = gamma_star - 2.0 * eps_star
    gamma_plus = gamma_star + 2.0 * eps_star
    if not 0.0 < gamma_minus < gamma_plus < 1.0:
        raise SpecValidationError(
            f"eps_star={eps_star} too large for gamma_star={gamma_star}: "
            f"gamma bounds ({gamma_minus:.4g}, {gamma_plus:.4g}) leave (0, 1)"
        )
    return gamma_minus, gamma_plus


def _scalar_or_array(result: np.ndarray, x) -> float | np.ndarray:
    if np.ndim(x) == 0:
        return float(result)
    return result


def _power_term(exponent: float, x: np.ndarray, order: int) -> np.ndarray:
    """order-th derivative of x^(1 + exponent)."""
    power = 1.0 + exponent
    coefficient = 1.0
    for m in range(order):
        coefficient *= power - m
    with np.errstate(divide="ignore", invalid="ignore"):
        return coefficient * x ** (power - order)


def _shape(spec: MapSpec) -> np.ndarray:
    return _PERTURBATION_SHAPES[spec.family] * spec.perturbation


def lifted_map(spec: MapSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x + _power_term(spec.exponent, x, 0) + P.polyval(x, _shape(spec))


def lifted_derivative(spec: MapSpec, x, order: int) -> np.ndarray:
    if order == 0:
        return lifted_map(spec, x)
    if not 1 <= order <= MAX_ORDER:
        raise SpecValidationError(f"unsupported derivative order {order} (1..{MAX_ORDER})")
    x = np.asarray(x, dtype=float)
    shape = P.polyder(_shape(spec), order)
    identity = 1.0 if order == 1 else 0.0
    return identity + _power_term(spec.exponent, x, order) + P.polyval(x, shape)


def derivative_excess(spec: MapSpec, x) -> np.ndarray:
    """T'(x) - 1, evaluated without forming T' so it keeps its digits near 0."""
    x = np.asarray(x, dtype=float)
    return _power_term(spec.exponent, x, 1) + P.polyval(x, P.polyder(_shape(spec)))


def secant_excess(spec: MapSpec, x) -> np.ndarray:
    """F(x) / x - 1 on (0, 1]."""
    x = np.asarray(x, dtype=float)
    return x**spec.exponent + P.polyval(x, _shape(spec)[1:])


def secant_gap(spec: MapSpec, x) -> np.ndarray:
    """T'(x) - F(x) / x in closed form: e x^e + sum (m - 1) c_m x^(m - 1)."""
    x = np.asarray(x, dtype=float)
    shape = _shape(spec)
    degrees = np.arange(1, shape.size)
    return spec.exponent * x**spec.exponent + P.polyval(x, (degrees - 1) * shape[1:])


def eval_map(spec: MapSpec, x) -> float | np.ndarray:
    """T(x) reduced mod 1; the lifted values 1 and 2 both land on 0."""
    return _scalar_or_array(np.mod(lifted_map(spec, x), 1.0), x)


def eval_derivative(spec: MapSpec, x, order: int) -> float | np.ndarray:
    return _scalar_or_array(lifted_derivative(spec, x, order), x)


def bisect_increasing(
    func: Callable[[np.ndarray], np.ndarray],
    target: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    policy: RootPolicy,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised bisection for func(x) = target with func increasing on [lo, hi].

    Stops once every bracket is narrower than tol * hi, which is at least as
    strict as the absolute tolerance on (0, 1]. Returns (root, lo, hi).
    """
    target = np.asarray(target, dtype=float)
    lo = np.array(np.broadcast_to(lo, target.shape), dtype=float)
    hi = np.array(np.broadcast_to(hi, target.shape), dtype=float)
    for _ in range(policy.max_iter):
        active = (hi - lo) > policy.tol * hi
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        above = func(mid) >= target
        hi = np.where(active & above, mid, hi)
        lo = np.where(active & ~above, mid, lo)
    else:
        logger.debug("bisection hit max_iter=%d", policy.max_iter)
    return 0.5 * (lo + hi), lo, hi


def _newton_polish(
    spec: MapSpec,
    root: np.ndarray,
    target: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        step = (lifted_map(spec, root) - target) / lifted_derivative(spec, root, 1)
        polished = root - step
    inside = np.isfinite(polished) & (polished >= lo) & (polished <= hi)
    return np.where(inside, polished, root)


def solve_branch_boundary(spec: MapSpec, policy: RootPolicy | None = None) -> float:
    """x* in (0, 1) with lifted T(x*) = 1."""
    policy = policy or build_root_policy()
    target = np.array(1.0)
    root, lo, hi = bisect_increasing(lambda x: lifted_map(spec, x), target, 0.0, 1.0, policy)
    if policy.newton_polish:
        root = _newton_polish(spec, root, target, lo, hi)
    return float(root)


def branch_inverse(
    spec: MapSpec,
    branch: Branch | str,
    y,
    policy: RootPolicy | None = None,
) -> float | np.ndarray:
    """Unique preimage of y in the chosen branch."""
    policy = policy or build_root_policy()
    branch = Branch(branch)
    values = np.asarray(y, dtype=float)
    boundary = spec.boundary

    def lifted(x: np.ndarray) -> np.ndarray:
        return lifted_map(spec, x)

    if branch is Branch.LEFT:
        target = values
        # x <= F(x) <= (2 + |p|) x on the left branch.
        lo = values / (2.0 + abs(spec.perturbation))
        hi = np.minimum(values, boundary)
        lo = np.where(lifted(lo) > target, 0.0, lo)
        hi = np.where(lifted(hi) < target, boundary, hi)
    else:
        target = values + 1.0
        lo = np.full_like(values, boundary)
        hi = np.ones_like(values)

    root, lo, hi = bisect_increasing(lifted, target, lo, hi, policy)
    if policy.newton_polish:
        root = _newton_polish(spec, root, target, lo, hi)
    return _scalar_or_array(root, y)
