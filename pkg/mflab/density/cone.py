"""Membership checks for the derivative-ratio cones D^k and their normalised tail variants D^k_1."""

from __future__ import annotations

import logging
from typing import Iterable

import numpy as np

from ..core.errors import ConeError, DensityError
from ..core.models import ConeParams, ConeReport, rising_factorial
from .density import Density, cumulative_at_nodes, quadrature

logger = logging.getLogger(__name__)

MAX_CONE_ORDER = 3
MASS_TOLERANCE = 1e-5


def derivative_ratios(d: Density, order: int) -> list[np.ndarray]:
    """[g'/g, g''/g, ...] up to `order`, at every node.

    Derivatives are taken of u = log g against t = log x with second-order
    nonuniform stencils and mapped back, which is exact for pure power laws.
    """
    if not 1 <= order <= MAX_CONE_ORDER:
        raise DensityError(f"derivative ratios are available up to order {MAX_CONE_ORDER}, got {order}")
    if np.any(d.values <= 0):
        worst = int(np.argmin(d.values))
        raise DensityError(f"cone membership needs a positive density; value {d.values[worst]:.3e} at x={d.points[worst]:.6g}")

    x = d.points
    t = np.log(x)
    u = np.log(d.values)
    u1 = np.gradient(u, t)
    ratios = [u1 / x]
    if order >= 2:
        u2 = np.gradient(u1, t)
        ratios.append((u1 * u1 + u2 - u1) / x**2)
    if order >= 3:
        u3 = np.gradient(u2, t)
        ratios.append((u1**3 + 3.0 * u1 * u2 - 3.0 * u1 * u1 + u3 - 3.0 * u2 + 2.0 * u1) / x**3)
    return ratios


def _checked_mask(d: Density, ell: int, x_min: float | None) -> np.ndarray:
    mask = np.ones(d.grid.n_cells, dtype=bool)
    mask[: ell + 1] = False
    mask[-ell:] = False
    if x_min is not None:
        mask &= d.points >= x_min
    return mask


def cone_membership(
    d: Density,
    params: ConeParams,
    k: int,
    *,
    unit: bool = True,
    x_min: float | None = None,
) -> ConeReport:
    """Check d against D^k (unit=False) or D^k_1 (unit=True).

    Derivative conditions |g^(l)| / g <= a_l / chi_l(x) are checked for
    l = 1..k, the k-th one standing in for the Lipschitz bound on g^(k-1).
    Margins are relative: 1 - observed / allowed, negative when violated.
    """
    if not 1 <= k <= min(params.r, MAX_CONE_ORDER):
        raise DensityError(f"cone order k={k} outside 1..{min(params.r, MAX_CONE_ORDER)}")

    margins: dict[str, float] = {}
    nodes: dict[str, float] = {}
    ratios = derivative_ratios(d, k)
    derivative_passed = True
    for ell, ratio in enumerate(ratios, start=1):
        mask = _checked_mask(d, ell, x_min)
        if not np.any(mask):
            continue
        scaled = np.abs(ratio[mask]) * params.chi(d.points[mask], ell)
        if not np.all(np.isfinite(scaled)):
            bad = d.points[mask][~np.isfinite(scaled)][0]
            raise DensityError(f"non-finite derivative ratio of order {ell} at x={bad:.6g}")
        slack = 1.0 - scaled / params.a[ell - 1]
        worst = int(np.argmin(slack))
        margins[f"a{ell}"] = float(slack[worst])
        nodes[f"a{ell}"] = float(d.points[mask][worst])
        derivative_passed &= bool(slack[worst] >= 0)

    mass = quadrature(d, strict=False)
    normalized = abs(mass - 1.0) <= MASS_TOLERANCE
    tail_passed = True
    if unit:
        x = d.grid.nodes[1:]
        primitive = cumulative_at_nodes(d)[1:]
        allowed = params.A * x ** (1.0 - params.gamma)
        window = np.ones_like(x, dtype=bool) if x_min is None else x >= x_min
        slack = 1.0 - primitive[window] / allowed[window]
        worst = int(np.argmin(slack))
        margins["A"] = float(slack[worst])
        nodes["A"] = float(x[window][worst])
        tail_passed = bool(slack[worst] >= 0)

    passed = derivative_passed and (not unit or (tail_passed and normalized))
    if not passed:
        logger.debug("cone check failed: margins=%s nodes=%s mass=%.3e", margins, nodes, mass)
    return ConeReport(
        passed=passed,
        derivative_passed=derivative_passed,
        tail_passed=tail_passed,
        normalized=normalized,
        k=k,
        mass=mass,
        worst_margins=margins,
        worst_nodes=nodes,
    )


def fit_cone_params(
    samples: Iterable[Density],
    gamma: float,
    r: int = MAX_CONE_ORDER,
    chi_star: float = 1.0,
    safety: float = 2.0,
) -> ConeParams:
    """Smallest cone constants (times `safety`) containing every sample and the reference density."""
    r = min(r, MAX_CONE_ORDER)
    a = [2.0 * rising_factorial(gamma, ell) for ell in range(1, r + 1)]
    tail = 2.0
    for d in samples:
        for ell, ratio in enumerate(derivative_ratios(d, r), start=1):
            mask = _checked_mask(d, ell, None)
            observed = np.abs(ratio[mask]) * np.minimum(d.points[mask] ** ell, chi_star)
            a[ell - 1] = max(a[ell - 1], safety * float(np.max(observed)))
        x = d.grid.nodes[1:]
        observed_tail = cumulative_at_nodes(d)[1:] / x ** (1.0 - gamma)
        tail = max(tail, safety * float(np.max(observed_tail)))
    return ConeParams(r=r, a=a, A=tail, chi_star=chi_star, gamma=gamma)


def require_in_cone(d: Density, params: ConeParams, k: int, name: str) -> ConeReport:
    """cone_membership against D^k_1, raising ConeError naming `name` when d falls outside."""
    report = cone_membership(d, params, k)
    if not report.passed:
        raise ConeError(name, k=k, margins=report.worst_margins, mass=report.mass)
    return report
