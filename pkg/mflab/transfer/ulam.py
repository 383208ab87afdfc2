"""Coarse Ulam discretisation, kept only as an independent cross-check of the pointwise operator."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..core.errors import DensityError
from ..core.models import Branch
from ..core.policies import SolverPolicy, build_solver_policy
from ..density.density import Density, cumulative_at_nodes, cumulative
from ..dynamics.map_family import MapSpec, branch_inverse

logger = logging.getLogger(__name__)

MAX_ULAM_CELLS = 512


@dataclass
class UlamResult:
    edges: np.ndarray
    masses: np.ndarray
    iterations: int


def ulam_matrix(spec: MapSpec, n_cells: int) -> sparse.csr_matrix:
    """Row-stochastic P with P[j, k] = |I_j  ∩  T^-1 I_k| / |I_j| on uniform cells."""
    if not 2 <= n_cells <= MAX_ULAM_CELLS:
        raise DensityError(f"Ulam cross-check supports 2..{MAX_ULAM_CELLS} cells, got {n_cells}")
    edges = np.linspace(0.0, 1.0, n_cells + 1)
    width = 1.0 / n_cells
    rows, cols, data = [], [], []
    for branch in (Branch.LEFT, Branch.RIGHT):
        bounds = np.asarray(branch_inverse(spec, branch, edges), dtype=float)
        for k in range(n_cells):
            lo, hi = bounds[k], bounds[k + 1]
            overlap = np.minimum(hi, edges[1:]) - np.maximum(lo, edges[:-1])
            hit = np.nonzero(overlap > 0)[0]
            rows.append(hit)
            cols.append(np.full(hit.size, k))
            data.append(overlap[hit] / width)
    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_cells, n_cells),
    )
    return matrix.tocsr()


def ulam_invariant_density(
    spec: MapSpec,
    n_cells: int,
    policy: SolverPolicy | None = None,
) -> UlamResult:
    """Invariant cell masses of the Ulam matrix by power iteration."""
    policy = policy or build_solver_policy()
    matrix = ulam_matrix(spec, n_cells).T.tocsr()
    masses = np.full(n_cells, 1.0 / n_cells)
    for iteration in range(1, policy.max_inner + 1):
        following = matrix @ masses
        following /= following.sum()
        change = float(np.abs(following - masses).sum())
        masses = following
        if change < policy.inner_tol:
            break
    else:
        logger.debug("Ulam power iteration stopped at max_inner with change %.3e", change)
    return UlamResult(edges=np.linspace(0.0, 1.0, n_cells + 1), masses=masses, iterations=iteration)


def ulam_discrepancy(h: Density, ulam: UlamResult) -> float:
    """sum_j | integral of h over cell j - Ulam mass of cell j |."""
    total = float(cumulative_at_nodes(h)[-1])
    primitive = np.asarray(cumulative(h, ulam.edges), dtype=float) / total
    return float(np.abs(np.diff(primitive) - ulam.masses).sum())
