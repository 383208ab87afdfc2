"""Grid certification of the expansion, tail, distortion and C^r monomial conditions.

For each sampled map and each grid point the verifier measures

    c_gamma = inf (T' - 1) / x^gamma          C_gamma = sup T'
    C_d     = sup_{right branch} T'' / T'^2
    b       = inf (1 / chi_l(T x) - w^l / chi_l(x)) / (|m| / chi_j(x))

where w = 1 / T' and m runs over the monomials of (w^l)^(l - j).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from ...core.errors import AssumptionError
from ...core.models import AssumptionConstants, AssumptionReport, MapFamily, MonomialBound
from ...density.grid import GradedGrid
from ..map_family import (
    MapSpec,
    build_map_spec,
    derivative_excess,
    gamma_bounds,
    lifted_derivative,
    lifted_map,
    secant_excess,
    secant_gap,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Monomial:
    """coefficient * w^p0 * (w')^p1 * (w'')^p2 * (w''')^p3."""

    coefficient: int
    powers: tuple[int, int, int, int]

    @property
    def label(self) -> str:
        names = ("w", "w'", "w''", "w'''")
        parts = []
        for name, power in zip(names, self.powers):
            if power == 1:
                parts.append(name)
            elif power > 1:
                parts.append(f"({name})^{power}" if "'" in name else f"{name}^{power}")
        body = "".join(parts)
        return body if self.coefficient == 1 else f"{self.coefficient}{body}"

    def evaluate(self, w_derivatives: tuple[np.ndarray, ...]) -> np.ndarray:
        result = np.full_like(w_derivatives[0], float(self.coefficient))
        for values, power in zip(w_derivatives, self.powers):
            if power:
                result = result * values**power
        return result


_MONOMIALS: dict[tuple[int, int], tuple[Monomial, ...]] = {
    (1, 1): (Monomial(1, (1, 0, 0, 0)),),
    (1, 0): (Monomial(1, (0, 1, 0, 0)),),
    (2, 2): (Monomial(1, (2, 0, 0, 0)),),
    (2, 1): (Monomial(2, (1, 1, 0, 0)),),
    (2, 0): (Monomial(2, (0, 2, 0, 0)), Monomial(2, (1, 0, 1, 0))),
    (3, 3): (Monomial(1, (3, 0, 0, 0)),),
    (3, 2): (Monomial(3, (2, 1, 0, 0)),),
    (3, 1): (Monomial(6, (1, 2, 0, 0)), Monomial(3, (2, 0, 1, 0))),
    (3, 0): (Monomial(6, (0, 3, 0, 0)), Monomial(18, (1, 1, 1, 0)), Monomial(3, (2, 0, 0, 1))),
}


def monomial_table() -> dict[tuple[int, int], tuple[Monomial, ...]]:
    """Monomials of the expansion of (w^l)^(l - j) for l <= 3, keyed by (l, j)."""
    return dict(_MONOMIALS)


def w_derivatives(spec: MapSpec, x: np.ndarray) -> tuple[np.ndarray, ...]:
    """(w, w', w'', w''') for w = 1 / T'."""
    d1, d2, d3, d4 = (lifted_derivative(spec, x, order) for order in range(1, 5))
    w = 1.0 / d1
    w1 = -d2 / d1**2
    w2 = -d3 / d1**2 + 2.0 * d2**2 / d1**3
    w3 = -d4 / d1**2 + 6.0 * d2 * d3 / d1**3 - 6.0 * d2**3 / d1**4
    return w, w1, w2, w3


def image_under_map(spec: MapSpec, x: np.ndarray) -> np.ndarray:
    """T(x) with the left branch closed at x*, so points up to x* map into (0, 1]."""
    lifted = lifted_map(spec, x)
    return np.where(x <= spec.boundary + 1e-12, lifted, lifted - 1.0)


def sample_spec_box(
    family: MapFamily | str,
    gamma_star: float,
    eps_star: float,
    n: int,
    seed: int,
) -> list[MapSpec]:
    """Deterministic sample of the (eps, s_h, c_h) box, corners first.

    CoupledPM: |eps| <= eps*, |s_h|, |c_h| <= 1. RemarkPM: eps in [0, eps*], s_h in [0, 1].
    """
    family = MapFamily(family)
    gamma_bounds(gamma_star, eps_star)
    if family is MapFamily.COUPLED_PM:
        low, high = np.array([-eps_star, -1.0, -1.0]), np.array([eps_star, 1.0, 1.0])
    else:
        low, high = np.array([0.0, 0.0, 0.0]), np.array([eps_star, 1.0, 0.0])

    corners = {tuple(point) for point in itertools.product(*zip(low, high))}
    triples = sorted(corners)[:n]
    rng = np.random.default_rng(seed)
    while len(triples) < n:
        triples.append(tuple(rng.uniform(low, high)))

    return [
        build_map_spec(family, gamma_star, float(eps), s_h=float(s_h), c_h=float(c_h))
        for eps, s_h, c_h in triples
    ]


def distortion_slack(
    spec: MapSpec,
    x: np.ndarray,
    ell: int,
    chi_star: float = 1.0,
) -> np.ndarray:
    """1 / chi_l(T x) - w^l / chi_l(x).

    Where both chi's are plain powers on the left branch the difference is
    x^-l (v - u) sum_k (1 + v)^k (1 + u)^(l - 1 - k) / ((1 + u)^l (1 + v)^l)
    with u = F(x)/x - 1 and v = T'(x) - 1.
    """
    image = image_under_map(spec, x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = 1.0 / lifted_derivative(spec, x, 1)
        slack = 1.0 / np.minimum(image**ell, chi_star) - w**ell / np.minimum(x**ell, chi_star)
        powers = (x <= spec.boundary + 1e-12) & (x**ell <= chi_star) & (image**ell <= chi_star)
        if np.any(powers):
            xp = x[powers]
            u = secant_excess(spec, xp)
            v = derivative_excess(spec, xp)
            partial = sum((1.0 + v) ** k * (1.0 + u) ** (ell - 1 - k) for k in range(ell))
            slack[powers] = secant_gap(spec, xp) * partial / ((1.0 + u) ** ell * (1.0 + v) ** ell) / xp**ell
    return slack


def _require_finite(values: np.ndarray, x: np.ndarray, ell: int, j: int, what: str) -> None:
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise AssumptionError(f"non-finite {what}", x=float(x[bad][0]), ell=ell, j=j)


def verify_assumptions(
    specs: list[MapSpec],
    grid: GradedGrid,
    *,
    gamma_star: float,
    eps_star: float,
    r: int = 3,
    chi_star: float = 1.0,
) -> AssumptionReport:
    if not specs:
        raise ValueError("verify_assumptions needs at least one map")
    if not 1 <= r <= 3:
        raise ValueError(f"monomial tables cover r <= 3, got r={r}")
    gamma_minus, gamma_plus = gamma_bounds(gamma_star, eps_star)
    x = grid.points

    c_gamma = np.inf
    C_gamma = -np.inf
    C_d = -np.inf
    best: dict[tuple[int, int, str], tuple[float, float]] = {}

    def chi(values: np.ndarray, order: int) -> np.ndarray:
        return np.minimum(values**order, chi_star)

    for spec in specs:
        d1 = lifted_derivative(spec, x, 1)
        d2 = lifted_derivative(spec, x, 2)
        _require_finite(d1, x, 0, 0, "T'")
        _require_finite(d2, x, 0, 0, "T''")

        tail = derivative_excess(spec, x) / x**gamma_plus
        c_gamma = min(c_gamma, float(np.min(tail)))
        C_gamma = max(C_gamma, float(np.max(d1)))
        right = x > spec.boundary
        if np.any(right):
            C_d = max(C_d, float(np.max(d2[right] / d1[right] ** 2)))

        derivatives = w_derivatives(spec, x)
        slacks = {ell: distortion_slack(spec, x, ell, chi_star) for ell in range(1, r + 1)}
        for (ell, j), monomials in _MONOMIALS.items():
            if ell > r:
                continue
            slack = slacks[ell]
            _require_finite(slack, x, ell, j, "distortion slack")
            for monomial in monomials:
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    scale = np.abs(monomial.evaluate(derivatives)) / chi(x, j)
                _require_finite(scale, x, ell, j, f"monomial {monomial.label}")
                with np.errstate(divide="ignore"):
                    ratio = np.where(scale > 0, slack / scale, np.inf)
                worst = int(np.argmin(ratio))
                key = (ell, j, monomial.label)
                if key not in best or ratio[worst] < best[key][0]:
                    best[key] = (float(ratio[worst]), float(x[worst]))

    entries = [
        MonomialBound(ell=ell, j=j, monomial=label, b=value, worst_x=worst_x)
        for (ell, j, label), (value, worst_x) in sorted(best.items())
    ]
    b = [min(entry.b for entry in entries if entry.ell == ell) for ell in range(1, r + 1)]
    passed = c_gamma > 0 and all(value > 0 for value in b) and np.isfinite(C_gamma) and np.isfinite(C_d)
    logger.debug("assumptions: c_gamma=%.4g C_gamma=%.4g C_d=%.4g b=%s", c_gamma, C_gamma, C_d, b)

    constants = None
    if passed and r >= 2 and C_d > 0:
        constants = AssumptionConstants(
            c_gamma=c_gamma,
            C_gamma=C_gamma,
            gamma=gamma_plus,
            C_d=C_d,
            b=b,
            chi_star=chi_star,
            r=r,
            gamma_minus=gamma_minus,
            gamma_plus=gamma_plus,
        )
    family = specs[0].family
    return AssumptionReport(
        passed=bool(passed),
        family=family,
        gamma_star=gamma_star,
        eps_star=eps_star,
        spec_count=len(specs),
        grid_nodes=grid.n_cells,
        c_gamma=c_gamma,
        C_gamma=C_gamma,
        C_d=C_d,
        b=b,
        entries=entries,
        constants=constants,
    )
