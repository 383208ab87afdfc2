"""Pointwise transfer operators of the two-branch maps on a graded grid.

    (L g)(x) = sum over branches b of g(y_b) / T'(y_b),   y_b = T_b^-1(x)

Preimages and weights 1 / T' at every node depend only on the map and the
grid, so they are computed once per (family, exponent, perturbation, grid)
and reused by every later application with the same coupling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from ..core.config import settings
from ..core.errors import DensityError
from ..core.models import Branch, MapFamily
from ..density.density import (
    Density,
    coupling_functionals,
    interpolate,
    interpolation_weights,
    normalize,
)
from ..density.grid import GradedGrid
from ..dynamics.map_family import MapSpec, branch_inverse, build_map_spec, lifted_derivative

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TransferContext:
    spec: MapSpec
    grid: GradedGrid
    left: np.ndarray
    right: np.ndarray
    w_left: np.ndarray
    w_right: np.ndarray

    def preimages(self, branch: Branch) -> tuple[np.ndarray, np.ndarray]:
        if Branch(branch) is Branch.LEFT:
            return self.left, self.w_left
        return self.right, self.w_right


class _SpecKey:
    """Hashes a MapSpec by the quantities its preimages depend on."""

    __slots__ = ("spec",)

    def __init__(self, spec: MapSpec) -> None:
        self.spec = spec

    def __hash__(self) -> int:
        return hash(self.spec.cache_key)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, _SpecKey) and self.spec.cache_key == other.spec.cache_key


@lru_cache(maxsize=settings.preimage_cache_size)
def _cached_context(key: _SpecKey, grid: GradedGrid) -> TransferContext:
    spec = key.spec
    x = grid.points
    left = np.asarray(branch_inverse(spec, Branch.LEFT, x), dtype=float)
    right = np.asarray(branch_inverse(spec, Branch.RIGHT, x), dtype=float)
    for array in (left, right):
        array.setflags(write=False)
    w_left = 1.0 / lifted_derivative(spec, left, 1)
    w_right = 1.0 / lifted_derivative(spec, right, 1)
    logger.debug("preimages cached for %s on %d cells", spec.cache_key, grid.n_cells)
    return TransferContext(spec=spec, grid=grid, left=left, right=right, w_left=w_left, w_right=w_right)


def transfer_context(spec: MapSpec, grid: GradedGrid) -> TransferContext:
    return _cached_context(_SpecKey(spec), grid)


def clear_preimage_cache() -> None:
    _cached_context.cache_clear()


def _check_grid(ctx: TransferContext, g: Density) -> None:
    if g.grid != ctx.grid:
        raise DensityError(f"density grid {g.grid} does not match transfer grid {ctx.grid}")


def apply_transfer(ctx: TransferContext, g: Density) -> Density:
    _check_grid(ctx, g)
    values = interpolate(g, ctx.left) * ctx.w_left + interpolate(g, ctx.right) * ctx.w_right
    return g.with_values(values)


def restricted_transfer(ctx: TransferContext, g: Density, branch: Branch | str) -> Density:
    """Single-branch operator (P_b g)(x) = g(y_b) / T'(y_b)."""
    _check_grid(ctx, g)
    points, weights = ctx.preimages(Branch(branch))
    return g.with_values(interpolate(g, points) * weights)


def transfer_matrix(ctx: TransferContext, g: Density) -> sparse.csr_matrix:
    """Sparse M with M @ g.values == apply_transfer(ctx, g).values.

    Power-law cells enter through their Euler weights at g, so M is the
    interpolant frozen at the current local exponents.
    """
    _check_grid(ctx, g)
    n = ctx.grid.n_cells
    rows, cols, data = [], [], []
    node = np.arange(n)
    for points, weights in ((ctx.left, ctx.w_left), (ctx.right, ctx.w_right)):
        lo, hi, w_lo, w_hi = interpolation_weights(g, points)
        rows.extend((node, node))
        cols.extend((lo, hi))
        data.extend((w_lo * weights, w_hi * weights))
    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return matrix.tocsr()


def coupled_spec(g: Density, family: MapFamily | str, gamma_star: float, epsilon: float) -> MapSpec:
    s_h, c_h = coupling_functionals(g, family)
    return build_map_spec(family, gamma_star, epsilon, s_h=s_h, c_h=c_h)


def self_consistent_step(
    g: Density,
    family: MapFamily | str,
    gamma_star: float,
    epsilon: float,
    *,
    renormalize: bool = False,
) -> Density:
    """L_eps g = L_{eps g} g: the map is chosen by g's own coupling functionals."""
    spec = coupled_spec(g, family, gamma_star, epsilon)
    image = apply_transfer(transfer_context(spec, g.grid), g)
    return normalize(image) if renormalize else image
