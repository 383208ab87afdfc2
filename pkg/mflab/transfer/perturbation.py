"""Constructive splitting of L_{eps h0} v - L_{eps h1} v and the coupling-derivative check."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..core.errors import DensityError, SpecValidationError
from ..core.models import MapFamily, PerturbationConstants
from ..core.policies import SolverPolicy, build_cone_params, build_solver_policy
from ..density.cone import require_in_cone
from ..density.density import Density, coupling_functionals, l1_distance, quadrature, tail_sup
from ..dynamics.map_family import build_map_spec, gamma_bounds
from .operator import apply_transfer, coupled_spec, transfer_context

logger = logging.getLogger(__name__)

STABILITY_TOLERANCE = 0.15


@dataclass
class PerturbationResult:
    delta: float
    f0: Density | None
    f1: Density | None
    ratio: float
    tail_sups: tuple[float, float]
    beta: float
    constants: PerturbationConstants | None


@dataclass
class PartialDerivativeReport:
    passed: bool
    s_sup: float
    x_sup: float
    s_sup_refined: float
    x_sup_refined: float
    eta: float
    weight_exponent: float
    worst_x: float


def perturbation_decomposition(
    v: Density,
    h0: Density,
    h1: Density,
    family: MapFamily | str,
    gamma_star: float,
    epsilon: float,
    *,
    eps_star: float,
    beta: float | None = None,
    policy: SolverPolicy | None = None,
) -> PerturbationResult:
    """delta (f0 - f1) = L_{eps h0} v - L_{eps h1} v with f0, f1 probability densities.

    f0 and f1 are the positive and negative parts of the difference, each
    divided by its own mass; entries within sign_threshold of 0 are dropped.
    v must lie in D^2_1 with the tail exponent gamma_plus.
    """
    policy = policy or build_solver_policy()
    gamma_minus, gamma_plus = gamma_bounds(gamma_star, eps_star)
    beta = 4.0 * abs(epsilon) if beta is None else beta
    require_in_cone(v, build_cone_params(gamma_plus), 2, "v")

    image0 = apply_transfer(transfer_context(coupled_spec(h0, family, gamma_star, epsilon), v.grid), v)
    image1 = apply_transfer(transfer_context(coupled_spec(h1, family, gamma_star, epsilon), v.grid), v)
    difference = image0.values - image1.values
    positive = np.where(difference > policy.sign_threshold, difference, 0.0)
    negative = np.where(difference < -policy.sign_threshold, -difference, 0.0)

    delta = quadrature(v.with_values(positive), strict=False)
    if delta < policy.delta_floor:
        return PerturbationResult(
            delta=0.0, f0=None, f1=None, ratio=0.0, tail_sups=(0.0, 0.0), beta=beta, constants=None
        )
    negative_mass = quadrature(v.with_values(negative), strict=False)
    f0 = v.with_values(positive / delta)
    f1 = v.with_values(negative / negative_mass) if negative_mass > 0 else v.with_values(positive / delta)
    if abs(delta - negative_mass) > 1e-6:
        logger.debug("positive and negative parts differ in mass: %.3e vs %.3e", delta, negative_mass)

    spread = l1_distance(h0, h1)
    ratio = delta / (abs(epsilon) * spread) if epsilon != 0 and spread > 0 else 0.0
    sups = (tail_sup(f0, beta), tail_sup(f1, beta))

    constants = None
    if beta < min(gamma_plus, 1.0 - gamma_plus):
        constants = PerturbationConstants(
            beta=beta,
            C_beta=max(ratio, *sups),
            gamma_minus=gamma_minus,
            gamma_plus=gamma_plus,
        )
    return PerturbationResult(
        delta=delta, f0=f0, f1=f1, ratio=ratio, tail_sups=sups, beta=beta, constants=constants
    )


def _path_derivative_sups(
    v: Density,
    coupling0: tuple[float, float],
    coupling1: tuple[float, float],
    family: MapFamily,
    gamma_star: float,
    epsilon: float,
    s_grid: list[float],
    eta: float,
    weight_exponent: float,
) -> tuple[float, float, float]:
    x = v.points

    def image(s: float) -> np.ndarray:
        s_h = (1.0 - s) * coupling0[0] + s * coupling1[0]
        c_h = (1.0 - s) * coupling0[1] + s * coupling1[1]
        spec = build_map_spec(family, gamma_star, epsilon, s_h=s_h, c_h=c_h)
        return apply_transfer(transfer_context(spec, v.grid), v).values

    s_sup = 0.0
    x_sup = 0.0
    worst_x = float(x[-1])
    for s in s_grid:
        ds = (image(s + eta) - image(s - eta)) / (2.0 * eta)
        dx = np.gradient(ds, x)
        for values in (ds, dx):
            bad = ~np.isfinite(values)
            if np.any(bad):
                raise DensityError(f"non-finite path derivative at x={float(x[bad][0]):.6g}, s={s}")
        weighted_s = np.abs(ds) * x**weight_exponent / abs(epsilon)
        weighted_x = np.abs(dx) * x ** (weight_exponent + 1.0) / abs(epsilon)
        if weighted_s.max() > s_sup:
            s_sup = float(weighted_s.max())
            worst_x = float(x[int(np.argmax(weighted_s))])
        x_sup = max(x_sup, float(weighted_x.max()))
    return s_sup, x_sup, worst_x


def partial_derivative_bound_check(
    v: Density,
    f0: Density,
    f1: Density,
    family: MapFamily | str,
    gamma_star: float,
    epsilon: float,
    *,
    eps_star: float,
    s_grid: list[float] | None = None,
    eta: float = 1e-3,
) -> PartialDerivativeReport:
    """sup_x |d/ds (L_s v)| x^(g+ - g-) / |eps| along f_s = (1 - s) f0 + s f1, plus the x-derivative analogue.

    The coupling functionals are linear, so the path is traced through the
    couplings of f0 and f1. Passes when both suprema are finite and agree
    between steps eta and eta / 2 within 15%.
    """
    family = MapFamily(family)
    gamma_minus, gamma_plus = gamma_bounds(gamma_star, eps_star)
    weight_exponent = gamma_plus - gamma_minus
    s_grid = s_grid or [0.25, 0.5, 0.75]
    if any(s - eta < 0 or s + eta > 1 for s in s_grid):
        raise SpecValidationError(f"s grid {s_grid} with step {eta} leaves [0, 1]")

    coupling0 = coupling_functionals(f0, family)
    coupling1 = coupling_functionals(f1, family)
    if epsilon == 0 or coupling0 == coupling1:
        return PartialDerivativeReport(
            passed=True, s_sup=0.0, x_sup=0.0, s_sup_refined=0.0, x_sup_refined=0.0,
            eta=eta, weight_exponent=weight_exponent, worst_x=float(v.points[-1]),
        )

    args = (v, coupling0, coupling1, family, gamma_star, epsilon, s_grid)
    s_sup, x_sup, worst_x = _path_derivative_sups(*args, eta, weight_exponent)
    s_fine, x_fine, _ = _path_derivative_sups(*args, eta / 2.0, weight_exponent)

    def stable(coarse: float, fine: float) -> bool:
        scale = max(coarse, fine)
        return scale == 0 or abs(coarse - fine) <= STABILITY_TOLERANCE * scale

    passed = all(np.isfinite((s_sup, x_sup, s_fine, x_fine))) and stable(s_sup, s_fine) and stable(x_sup, x_fine)
    return PartialDerivativeReport(
        passed=bool(passed),
        s_sup=s_sup,
        x_sup=x_sup,
        s_sup_refined=s_fine,
        x_sup_refined=x_fine,
        eta=eta,
        weight_exponent=weight_exponent,
        worst_x=worst_x,
    )
