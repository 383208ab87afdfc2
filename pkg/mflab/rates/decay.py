from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core.errors import FitError
from ..core.models import ConvergenceReport
from ..core.policies import RatePolicy, build_rate_policy

logger = logging.getLogger(__name__)

Distances = Sequence[tuple[int, float]]


@dataclass(frozen=True)
class PowerBoundCheck:
    constant: float
    satisfied: bool
    worst_excess: float
    growth: float = 0.0


def _window(distances: Distances, window: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = window
    n = np.array([step for step, _ in distances], dtype=float)
    d = np.array([value for _, value in distances], dtype=float)
    inside = (n >= lo) & (n <= hi)
    return n[inside], d[inside]


def fit_decay_exponent(
    distances: Distances,
    window: tuple[int, int],
    policy: RatePolicy | None = None,
) -> tuple[float, float]:
    """Least-squares line through (log n, log d_n) over the window: returns (slope, e^intercept)."""
    policy = policy or build_rate_policy()
    n, d = _window(distances, window)
    if n.size < policy.min_fit_points:
        raise FitError(f"need at least {policy.min_fit_points} points in window {window}, got {n.size}")
    if np.any(d <= 0) or np.any(n <= 0):
        raise FitError(f"log-log fit needs positive n and d_n inside window {window}")
    slope, intercept = np.polyfit(np.log(n), np.log(d), 1)
    return float(slope), float(np.exp(intercept))


def check_power_bound(
    distances: Distances,
    exponent: float,
    front: tuple[int, int],
    back: tuple[int, int],
    tolerance: float | None = None,
) -> PowerBoundCheck:
    """Bound d_n <= C n^exponent with C = max of d_n n^-exponent over front and back together.

    With C taken over the whole range the inequality holds by construction, so
    the verdict is on the back window: the scaled sequence d_n n^-exponent
    must level off, i.e. its log-log slope there is at most `tolerance`.
    `worst_excess` is how far the back window overshoots the front-only
    constant; it is reported, not judged.
    """
    if tolerance is None:
        tolerance = build_rate_policy().bound_tolerance
    n_front, d_front = _window(distances, front)
    n_back, d_back = _window(distances, back)
    if n_front.size == 0 or n_back.size == 0:
        raise FitError(f"empty front {front} or back {back} window")
    front_constant = float(np.max(d_front * n_front**-exponent))
    scaled_back = d_back * n_back**-exponent
    constant = max(front_constant, float(np.max(scaled_back)))
    if constant <= 0:
        return PowerBoundCheck(constant=0.0, satisfied=bool(np.all(d_back <= 0)), worst_excess=0.0, growth=-np.inf)

    worst = float(np.max(scaled_back)) / front_constant - 1.0 if front_constant > 0 else np.inf
    positive = scaled_back > 0
    if np.count_nonzero(positive) >= 2 and np.ptp(n_back[positive]) > 0:
        growth = float(np.polyfit(np.log(n_back[positive]), np.log(scaled_back[positive]), 1)[0])
    else:
        growth = -np.inf
    return PowerBoundCheck(constant=constant, satisfied=growth <= tolerance, worst_excess=worst, growth=growth)


def build_convergence_report(
    distances: Distances,
    bound_exponent: float,
    fit_window: tuple[int, int],
    front: tuple[int, int],
    back: tuple[int, int],
    policy: RatePolicy | None = None,
) -> ConvergenceReport:
    policy = policy or build_rate_policy()
    _, d_fit = _window(distances, fit_window)
    if d_fit.size and np.all(d_fit == 0):
        exponent, constant = float("-inf"), 0.0
    else:
        exponent, constant = fit_decay_exponent(distances, fit_window, policy)
    bound = check_power_bound(distances, bound_exponent, front, back, policy.bound_tolerance)
    logger.debug(
        "fit %s: slope=%.4f constant=%.4g; bound n^%.4f C=%.4g excess=%.3f growth=%.3f",
        fit_window, exponent, constant, bound_exponent, bound.constant, bound.worst_excess, bound.growth,
    )
    return ConvergenceReport(
        distances=[(int(step), float(value)) for step, value in distances],
        fit_window=fit_window,
        fitted_exponent=exponent,
        fitted_constant=constant,
        bound_exponent=bound_exponent,
        bound_constant=bound.constant,
        bound_satisfied=bound.satisfied,
        worst_excess=bound.worst_excess,
    )


def split_windows(n_steps: int, fit_lo: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Front third / back two thirds of [fit_lo, n_steps]."""
    if n_steps <= fit_lo:
        raise FitError(f"n_steps={n_steps} must exceed the fit window start {fit_lo}")
    cut = fit_lo + max(1, (n_steps - fit_lo) // 3)
    return (fit_lo, cut), (cut, n_steps)
