from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..core.errors import DensityError
from ..core.policies import GridPolicy, build_grid_policy


@dataclass(frozen=True)
class GradedGrid:
    """Nodes x_i = (i / n_cells)^q, i = 0..n_cells, clustered at the singular end 0."""

    n_cells: int
    grading_q: float

    def __post_init__(self) -> None:
        if self.n_cells < 2:
            raise DensityError(f"n_cells must be at least 2, got {self.n_cells}")
        if self.grading_q < 1.0:
            raise DensityError(f"grading_q must be >= 1, got {self.grading_q}")

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = (np.arange(self.n_cells + 1) / self.n_cells) ** self.grading_q
        nodes.setflags(write=False)
        return nodes

    @property
    def points(self) -> np.ndarray:
        """Evaluation points x_1..x_n; x_0 = 0 carries no value."""
        return self.nodes[1:]

    @cached_property
    def widths(self) -> np.ndarray:
        widths = np.diff(self.nodes)
        widths.setflags(write=False)
        return widths

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        """Weights w_i with sum_i w_i v_i the trapezoid rule on [0, 1] with value 0 at x_0 dropped.

        The first cell contributes x_1 / 2 to node 1, so the rule is linear in
        the values and exact for affine data vanishing at 0.
        """
        widths = self.widths
        weights = np.zeros(self.n_cells)
        weights += 0.5 * widths
        weights[:-1] += 0.5 * widths[1:]
        weights.setflags(write=False)
        return weights

    def supports(self, gamma: float) -> bool:
        return self.grading_q >= 1.0 / (1.0 - gamma)


def build_grid(gamma: float, n_cells: int | None = None, policy: GridPolicy | None = None) -> GradedGrid:
    policy = policy or build_grid_policy()
    return GradedGrid(n_cells=n_cells or policy.n_cells, grading_q=policy.grading_for(gamma))
