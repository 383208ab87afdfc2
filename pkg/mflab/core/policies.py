from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict

from .config import settings
from .models import ConeParams


class GridPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_cells: int
    rate_n_cells: int
    grading_q: float
    min_grading_q: float
    interpolation_switch: float
    assumption_grid_nodes: int

    def grading_for(self, gamma: float) -> float:
        """Explicit grading wins; otherwise max(3, ceil(2 / (1 - gamma)))."""
        if self.grading_q > 0:
            return self.grading_q
        return max(self.min_grading_q, float(math.ceil(2.0 / (1.0 - gamma))))


class RootPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: float = 1e-13
    max_iter: int = 200
    newton_polish: bool = True


class SolverPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    inner_solver: str
    inner_tol: float
    outer_tol: float
    max_outer: int
    max_inner: int
    max_linearizations: int
    stagnation_window: int
    stagnation_ratio: float
    sign_threshold: float
    delta_floor: float


class EnsemblePolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    burn_in: int
    histogram_bins: int


class RatePolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    fit_window_lo: int
    bound_tolerance: float
    sequence_horizon: int
    min_fit_points: int = 5


def build_grid_policy() -> GridPolicy:
    return GridPolicy(
        n_cells=settings.n_cells,
        rate_n_cells=settings.rate_n_cells,
        grading_q=settings.grading_q,
        min_grading_q=settings.min_grading_q,
        interpolation_switch=settings.interpolation_switch,
        assumption_grid_nodes=settings.assumption_grid_nodes,
    )


def build_root_policy() -> RootPolicy:
    return RootPolicy(
        tol=settings.preimage_tol,
        max_iter=settings.preimage_max_iter,
        newton_polish=settings.newton_polish,
    )


def build_solver_policy(**overrides) -> SolverPolicy:
    values = {
        "inner_solver": settings.inner_solver,
        "inner_tol": settings.inner_tol,
        "outer_tol": settings.outer_tol,
        "max_outer": settings.max_outer,
        "max_inner": settings.max_inner,
        "max_linearizations": settings.max_linearizations,
        "stagnation_window": settings.stagnation_window,
        "stagnation_ratio": settings.stagnation_ratio,
        "sign_threshold": settings.sign_threshold,
        "delta_floor": settings.delta_floor,
    }
    values.update({key: value for key, value in overrides.items() if value is not None})
    return SolverPolicy(**values)


def build_ensemble_policy() -> EnsemblePolicy:
    return EnsemblePolicy(
        burn_in=settings.burn_in,
        histogram_bins=settings.histogram_bins,
    )


def build_rate_policy() -> RatePolicy:
    return RatePolicy(
        fit_window_lo=settings.fit_window_lo,
        bound_tolerance=settings.bound_tolerance,
        sequence_horizon=settings.sequence_horizon,
    )


def build_cone_params(gamma: float) -> ConeParams:
    """Calibrated cone constants for the tail exponent gamma."""
    a = [settings.cone_a1, settings.cone_a2, settings.cone_a3]
    r = settings.regularity_r
    if r > len(a):
        a.extend(a[-1] * 10.0 ** (ell - len(a)) for ell in range(len(a) + 1, r + 1))
    return ConeParams(r=r, a=a[:r], A=settings.cone_tail_a, chi_star=settings.chi_star, gamma=gamma)
