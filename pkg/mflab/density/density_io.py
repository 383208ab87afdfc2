from __future__ import annotations

from pathlib import Path

import numpy as np

from ..core.errors import DensityError
from .density import Density
from .grid import GradedGrid

CSV_HEADER = "x,value"
_NODE_RTOL = 1e-9


def write_density_csv(d: Density, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack((d.points, d.values))
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        np.savetxt(handle, table, delimiter=",", header=CSV_HEADER, comments="", fmt="%.17g")
    return path


def read_density_csv(path: Path) -> Density:
    """Load a (x, value) table written on a graded grid; the grading is recovered from x_1."""
    path = Path(path)
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DensityError(f"cannot read density CSV {path}: {exc}") from exc
    if table.shape[1] != 2 or table.shape[0] < 2:
        raise DensityError(f"{path}: expected at least two rows of (x, value), got shape {table.shape}")

    x, values = table[:, 0], table[:, 1]
    if np.any(np.diff(x) <= 0):
        raise DensityError(f"{path}: x column must be strictly increasing")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise DensityError(f"{path}: values must be finite and nonnegative")
    if x[0] <= 0:
        raise DensityError(f"{path}: densities live on (0, 1]; first x is {x[0]!r}")

    n_cells = x.size
    grading_q = round(float(np.log(x[0]) / np.log(1.0 / n_cells)), 9)
    grid = GradedGrid(n_cells=n_cells, grading_q=grading_q)
    if not np.allclose(grid.points, x, rtol=_NODE_RTOL, atol=0.0):
        raise DensityError(f"{path}: x column is not a graded grid (i/n)^q")
    return Density(grid, values)
