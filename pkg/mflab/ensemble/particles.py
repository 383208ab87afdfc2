"""Finite mean-field particle system.

Every step first reads the coupling (s, c) off the empirical measure of the
current positions, then moves all particles with the one map that coupling
selects:

    x_j  ->  T_{eps, (s, c)}(x_j),   s = mean sin(2 pi x),  c = mean cos(2 pi x)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import stats

from ..core.errors import DensityError
from ..core.models import MapFamily
from ..core.policies import EnsemblePolicy, build_ensemble_policy
from ..density.density import Density, cumulative, cumulative_at_nodes
from ..dynamics.map_family import build_map_spec, eval_map

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[str], None]


@dataclass(frozen=True, eq=False)
class Ensemble:
    positions: np.ndarray
    rng_seed: int
    step_count: int = 0

    def __post_init__(self) -> None:
        positions = np.array(self.positions, dtype=float).ravel()
        if positions.size < 1:
            raise DensityError("an ensemble needs at least one particle")
        if np.any(positions < 0) or np.any(positions >= 1) or not np.all(np.isfinite(positions)):
            raise DensityError("particle positions must lie in [0, 1)")
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)

    @property
    def size(self) -> int:
        return int(self.positions.size)


@dataclass
class EnsembleRun:
    ensemble: Ensemble
    coupling_series: np.ndarray
    ks_distance: float | None = None
    snapshots: list[tuple[int, np.ndarray, np.ndarray]] = field(default_factory=list)


def _mean(values: np.ndarray) -> float:
    """Correctly rounded mean, so it depends on the multiset of values and not their order."""
    return math.fsum(values.tolist()) / values.size


def empirical_coupling(e: Ensemble, family: MapFamily | str) -> tuple[float, float]:
    family = MapFamily(family)
    x = e.positions
    if family is MapFamily.COUPLED_PM:
        return _mean(np.sin(2.0 * np.pi * x)), _mean(np.cos(2.0 * np.pi * x))
    return _mean(np.sin(np.pi * x)), 0.0


def ensemble_step(
    e: Ensemble,
    gamma_star: float,
    epsilon: float,
    family: MapFamily | str,
) -> Ensemble:
    s_h, c_h = empirical_coupling(e, family)
    spec = build_map_spec(family, gamma_star, epsilon, s_h=s_h, c_h=c_h)
    return replace(e, positions=eval_map(spec, e.positions), step_count=e.step_count + 1)


def sample_ensemble(h: Density, n: int, seed: int) -> Ensemble:
    """n i.i.d. positions drawn from h by inverting its node CDF."""
    rng = np.random.default_rng(seed)
    cdf = cumulative_at_nodes(h)
    cdf = cdf / cdf[-1]
    positions = np.interp(rng.random(n), cdf, h.grid.nodes)
    positions = np.minimum(positions, np.nextafter(1.0, 0.0))
    return Ensemble(positions=positions, rng_seed=seed)


def ks_distance(e: Ensemble, h: Density) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of e and h."""
    total = float(cumulative_at_nodes(h)[-1])

    def cdf(x: np.ndarray) -> np.ndarray:
        return np.asarray(cumulative(h, np.clip(x, 0.0, 1.0)), dtype=float) / total

    return float(stats.kstest(e.positions, cdf).statistic)


def histogram(e: Ensemble, bins: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    bins = bins or build_ensemble_policy().histogram_bins
    counts, edges = np.histogram(e.positions, bins=bins, range=(0.0, 1.0))
    return edges, counts


def simulate(
    initial: Ensemble,
    family: MapFamily | str,
    gamma_star: float,
    epsilon: float,
    n_steps: int,
    *,
    burn_in: int | None = None,
    reference: Density | None = None,
    snapshot_every: int | None = None,
    policy: EnsemblePolicy | None = None,
    on_progress: ProgressCallback | None = None,
) -> EnsembleRun:
    """burn_in + n_steps synchronous steps; the coupling is recorded at every step as (step, s, c)."""
    policy = policy or build_ensemble_policy()
    burn_in = policy.burn_in if burn_in is None else burn_in
    total = burn_in + n_steps
    series = np.zeros((total, 3))
    snapshots: list[tuple[int, np.ndarray, np.ndarray]] = []
    current = initial
    for step in range(total):
        s_h, c_h = empirical_coupling(current, family)
        series[step] = (current.step_count, s_h, c_h)
        spec = build_map_spec(family, gamma_star, epsilon, s_h=s_h, c_h=c_h)
        current = replace(current, positions=eval_map(spec, current.positions), step_count=current.step_count + 1)
        if snapshot_every and step >= burn_in and (step - burn_in + 1) % snapshot_every == 0:
            edges, counts = histogram(current, policy.histogram_bins)
            snapshots.append((current.step_count, edges, counts))
        if on_progress is not None and (step + 1) % 1000 == 0:
            phase = "burn-in" if step < burn_in else "sampling"
            on_progress(f"{phase} step {step + 1}/{total}: s={s_h:.5f} c={c_h:.5f}")

    distance = ks_distance(current, reference) if reference is not None else None
    logger.debug("ensemble of %d after %d steps: ks=%s", current.size, total, distance)
    return EnsembleRun(ensemble=current, coupling_series=series, ks_distance=distance, snapshots=snapshots)
