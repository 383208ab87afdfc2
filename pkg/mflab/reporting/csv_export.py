"""Plot-ready CSV tables: header row, '.' decimals, LF endings."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np


def _write_table(path: Path, header: str, columns: Sequence[np.ndarray], fmt: str | Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([np.asarray(column) for column in columns])
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        np.savetxt(handle, table, delimiter=",", header=header, comments="", fmt=fmt)
    return path


def write_distances_csv(
    path: Path,
    distances: Sequence[tuple[int, float]],
    bound_exponent: float,
    bound_constant: float,
) -> Path:
    n = np.array([step for step, _ in distances], dtype=float)
    d = np.array([value for _, value in distances], dtype=float)
    bound = bound_constant * n**bound_exponent
    return _write_table(path, "n,d_n,bound", (n, d, bound), ("%d", "%.17g", "%.17g"))


def write_histogram_csv(path: Path, edges: np.ndarray, counts: np.ndarray) -> Path:
    return _write_table(path, "bin_left,bin_right,count", (edges[:-1], edges[1:], counts), ("%.17g", "%.17g", "%d"))


def write_coupling_csv(path: Path, series: np.ndarray) -> Path:
    """Rows (step, s, c)."""
    series = np.asarray(series, dtype=float)
    return _write_table(path, "step,s,c", (series[:, 0], series[:, 1], series[:, 2]), ("%d", "%.17g", "%.17g"))
