"""Fixed points of the self-consistent operator and direct iteration.

The outer loop freezes the coupling (s_h, c_h), finds the invariant density of
the frozen linear operator, recomputes the coupling from it and repeats until
the coupling stops moving. Two inner solvers are available:

- ``direct``: sparse solves of (I - M) v = 0 with one row replaced by the
  normalisation, where M is the transfer matrix with interpolation exponents
  frozen at the previous iterate; a handful of relinearisations suffice.
- ``power``: plain power iteration with a stagnation stop. Convergence is only
  polynomial, so this is slow and mostly useful as a cross-check.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from ..core.errors import ConvergenceError, DensityError
from ..core.models import ConvergenceReport, MapFamily
from ..core.policies import SolverPolicy, build_rate_policy, build_solver_policy
from ..density.density import Density, constant_density, coupling_functionals, l1_distance, normalize, quadrature
from ..density.grid import GradedGrid
from ..dynamics.map_family import build_map_spec
from ..rates.decay import build_convergence_report
from .operator import TransferContext, apply_transfer, self_consistent_step, transfer_context, transfer_matrix

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[str], None]


@dataclass
class DirectIteration:
    final: Density
    residuals: list[float] = field(default_factory=list)
    reference_distances: list[float] | None = None
    masses: list[float] = field(default_factory=list)


@dataclass
class FixedPointResult:
    density: Density
    coupling: tuple[float, float]
    outer_iterations: int
    inner_iterations: int
    coupling_change: float
    residual: float
    solver: str


def iterate_direct(
    h0: Density,
    n: int,
    family: MapFamily | str,
    gamma_star: float,
    epsilon: float,
    *,
    reference: Density | None = None,
    on_progress: ProgressCallback | None = None,
) -> DirectIteration:
    """n applications of the self-consistent operator.

    residuals[k] = ||h_k - h_{k+1}||; reference_distances[k] = ||h_{k+1} - reference||.
    """
    result = DirectIteration(final=h0, reference_distances=[] if reference is not None else None)
    current = h0
    for step in range(1, n + 1):
        following = self_consistent_step(current, family, gamma_star, epsilon)
        result.residuals.append(l1_distance(current, following))
        result.masses.append(quadrature(following, strict=False))
        if reference is not None:
            result.reference_distances.append(l1_distance(following, reference))
        current = following
        if on_progress is not None and step % 100 == 0:
            on_progress(f"direct iteration {step}/{n}: residual {result.residuals[-1]:.3e}")
    result.final = current
    return result


def _direct_inner(ctx: TransferContext, h: Density, policy: SolverPolicy) -> tuple[Density, int]:
    n = ctx.grid.n_cells
    identity = sparse.identity(n, format="csr")
    normalisation = sparse.csr_matrix(ctx.grid.trapezoid_weights.reshape(1, -1))
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    current = h
    for count in range(1, policy.max_linearizations + 1):
        system = (identity - transfer_matrix(ctx, current)).tolil()
        system[n - 1, :] = normalisation
        solution = spsolve(system.tocsc(), rhs)
        if not np.all(np.isfinite(solution)):
            raise DensityError("frozen-coupling solve produced non-finite values")
        negative = solution < 0
        if np.any(negative):
            logger.debug("clipping %d negative entries (min %.3e)", int(negative.sum()), float(solution.min()))
            solution = np.where(negative, 0.0, solution)
        candidate = normalize(current.with_values(solution))
        change = l1_distance(candidate, current)
        current = candidate
        if change < policy.inner_tol:
            return current, count
    logger.debug("direct inner solve used all %d linearisations", policy.max_linearizations)
    return current, policy.max_linearizations


def _power_inner(ctx: TransferContext, h: Density, policy: SolverPolicy) -> tuple[Density, int]:
    current = h
    residuals: list[float] = []
    for count in range(1, policy.max_inner + 1):
        following = normalize(apply_transfer(ctx, current))
        residual = l1_distance(current, following)
        residuals.append(residual)
        current = following
        if residual < policy.inner_tol:
            return current, count
        window = policy.stagnation_window
        if len(residuals) > window:
            earlier = residuals[-window - 1]
            if earlier - residual < policy.stagnation_ratio * earlier:
                logger.debug("power iteration stagnated at residual %.3e after %d steps", residual, count)
                return current, count
    return current, policy.max_inner


_INNER_SOLVERS = {"direct": _direct_inner, "power": _power_inner}


def solve_frozen(ctx: TransferContext, h: Density, policy: SolverPolicy | None = None) -> tuple[Density, int]:
    """Invariant density of the linear operator of ctx, started from h."""
    policy = policy or build_solver_policy()
    try:
        inner = _INNER_SOLVERS[policy.inner_solver]
    except KeyError:
        raise ValueError(f"unknown inner solver {policy.inner_solver!r}") from None
    return inner(ctx, h, policy)


def solve_fixed_point(
    family: MapFamily | str,
    gamma_star: float,
    epsilon: float,
    grid: GradedGrid,
    *,
    initial: Density | None = None,
    initial_coupling: tuple[float, float] | None = None,
    policy: SolverPolicy | None = None,
    on_progress: ProgressCallback | None = None,
) -> FixedPointResult:
    policy = policy or build_solver_policy()
    family = MapFamily(family)
    h = normalize(initial) if initial is not None else constant_density(grid)
    coupling = initial_coupling if initial_coupling is not None else coupling_functionals(h, family)

    inner_total = 0
    change = float("inf")
    for outer in range(1, policy.max_outer + 1):
        spec = build_map_spec(family, gamma_star, epsilon, s_h=coupling[0], c_h=coupling[1])
        h, inner = solve_frozen(transfer_context(spec, grid), h, policy)
        inner_total += inner
        updated = coupling_functionals(h, family)
        change = max(abs(updated[0] - coupling[0]), abs(updated[1] - coupling[1]))
        coupling = updated
        if on_progress is not None:
            on_progress(f"outer {outer}: coupling change {change:.3e} after {inner} inner steps")
        logger.debug("outer %d: coupling=(%.12f, %.12f) change=%.3e", outer, *coupling, change)
        # With eps = 0 the map does not depend on the coupling.
        if change < policy.outer_tol or epsilon == 0:
            break
    else:
        raise ConvergenceError(f"coupling did not settle within {policy.max_outer} outer iterations", last_residual=change)

    residual = l1_distance(self_consistent_step(h, family, gamma_star, epsilon), h)
    return FixedPointResult(
        density=h,
        coupling=coupling,
        outer_iterations=outer,
        inner_iterations=inner_total,
        coupling_change=change,
        residual=residual,
        solver=policy.inner_solver,
    )


def convergence_experiment(
    h0: Density,
    reference: FixedPointResult,
    n: int,
    family: MapFamily | str,
    gamma_star: float,
    epsilon: float,
    *,
    fit_window: tuple[int, int] | None = None,
    front: tuple[int, int] | None = None,
    on_progress: ProgressCallback | None = None,
) -> ConvergenceReport:
    """d_k = ||L_eps^k h0 - h_eps|| with a fitted decay exponent and a front/back bound check.

    The bound exponent is 1 - 1/gamma for the exponent of the map at the fixed point.
    """
    rate_policy = build_rate_policy()
    run = iterate_direct(h0, n, family, gamma_star, epsilon, reference=reference.density, on_progress=on_progress)
    distances = [(k, d) for k, d in enumerate(run.reference_distances or [], start=1)]

    spec = build_map_spec(family, gamma_star, epsilon, s_h=reference.coupling[0], c_h=reference.coupling[1])
    bound_gamma = max(gamma_star, spec.exponent)
    lo = rate_policy.fit_window_lo
    fit_window = fit_window or (lo, n)
    front = front or (lo, max(lo + 1, min(n, 10 * lo)))
    back = (front[1], n)
    return build_convergence_report(distances, 1.0 - 1.0 / bound_gamma, fit_window, front, back, rate_policy)
