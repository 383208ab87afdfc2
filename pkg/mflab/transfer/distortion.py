from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core.models import Branch, ConeParams, ConeReport
from ..density.cone import cone_membership
from ..density.density import Density, constant_density, normalize
from ..density.grid import GradedGrid
from ..dynamics.map_family import MapSpec
from .operator import apply_transfer, restricted_transfer, transfer_context

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_START = 0.05


@dataclass
class DistortionResult:
    density: Density
    report: ConeReport
    branches: list[Branch]


def distortion_chain(
    specs: Sequence[MapSpec],
    branches: Sequence[Branch | str],
    grid: GradedGrid,
    params: ConeParams,
    *,
    k: int | None = None,
    x_min: float = DEFAULT_WINDOW_START,
) -> DistortionResult:
    """J_n = P_n ... P_1 1 for single-branch restricted operators, checked against D^k on [x_min, 1].

    J_n is rescaled after every step; the derivative ratios do not see the scale.
    """
    if len(specs) != len(branches):
        raise ValueError(f"{len(specs)} maps but {len(branches)} branches")
    chain = [Branch(branch) for branch in branches]
    current = constant_density(grid)
    for spec, branch in zip(specs, chain):
        image = restricted_transfer(transfer_context(spec, grid), current, branch)
        current = image.with_values(image.values / np.max(image.values))
    report = cone_membership(current, params, k or params.r, unit=False, x_min=x_min)
    logger.debug("distortion chain of %d steps: margins %s", len(chain), report.worst_margins)
    return DistortionResult(density=current, report=report, branches=chain)


def random_cone_density(grid: GradedGrid, gamma: float, rng: np.random.Generator, components: int = 4) -> Density:
    """Positive mixture of normalised power laws (1 - b) x^-b with b in [-2, gamma].

    Every component lies in the tail cone with A = 1 and |g^(l)| x^l / g bounded
    by |b (b + 1) ... (b + l - 1)|, so the mixture does too.
    """
    exponents = rng.uniform(-2.0, gamma, size=components)
    weights = rng.dirichlet(np.ones(components))
    x = grid.points
    values = np.zeros_like(x)
    for weight, b in zip(weights, exponents):
        values += weight * (1.0 - b) * x**-b
    return normalize(Density(grid, values))


@dataclass
class ConeInvarianceTrial:
    before: ConeReport
    after: ConeReport


def cone_invariance_trial(
    spec: MapSpec,
    samples: Sequence[Density],
    params: ConeParams,
    k: int,
) -> list[ConeInvarianceTrial]:
    """Cone membership of each sample and of its image under the transfer operator."""
    trials = []
    for sample in samples:
        ctx = transfer_context(spec, sample.grid)
        before = cone_membership(sample, params, k)
        after = cone_membership(apply_transfer(ctx, sample), params, k)
        trials.append(ConeInvarianceTrial(before=before, after=after))
    return trials
