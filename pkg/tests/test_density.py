from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from mflab.core.errors import DensityError, InterpolationError
from mflab.density.density import (
    Density,
    constant_density,
    coupling_functionals,
    cumulative,
    interpolate,
    interpolation_weights,
    l1_distance,
    monomial_density,
    normalize,
    quadrature,
    reference_density,
    tail_sup,
)
from mflab.density.density_io import read_density_csv, write_density_csv
from mflab.density.grid import GradedGrid, build_grid


def _grid(n_cells: int = 1024, grading_q: float = 3.0) -> GradedGrid:
    return GradedGrid(n_cells=n_cells, grading_q=grading_q)


def _mixture(grid: GradedGrid) -> Density:
    x = grid.points
    return Density(grid, 0.3 * x**-0.4 + 1.0 + np.sin(3.0 * x))


def test_graded_grid_nodes_and_weights() -> None:
    grid = _grid(8, 2.0)

    np.testing.assert_allclose(grid.nodes, (np.arange(9) / 8.0) ** 2)
    assert grid.points[0] == pytest.approx(1.0 / 64.0)
    assert grid.trapezoid_weights.sum() == pytest.approx(1.0 - 0.5 * grid.points[0])
    assert np.dot(grid.trapezoid_weights, grid.points) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        grid.nodes[1] = 0.5


def test_grid_validation_and_default_grading() -> None:
    with pytest.raises(DensityError):
        GradedGrid(n_cells=1, grading_q=3.0)
    with pytest.raises(DensityError):
        GradedGrid(n_cells=16, grading_q=0.5)

    grid = build_grid(0.5, n_cells=256)
    assert grid.grading_q == 4.0
    assert grid.supports(0.5)
    assert not _grid(16, 1.0).supports(0.5)


@pytest.mark.parametrize("make", [constant_density, lambda grid: monomial_density(grid, 1)])
def test_quadrature_is_exact_for_affine_densities(make) -> None:
    assert quadrature(make(_grid())) == pytest.approx(1.0, abs=1e-10)


def test_quadrature_of_curved_density_converges() -> None:
    assert quadrature(monomial_density(_grid(), 2)) == pytest.approx(1.0, abs=1e-4)


def test_quadrature_captures_singular_mass() -> None:
    d = reference_density(_grid(), 0.5)

    assert quadrature(d) == pytest.approx(1.0, abs=1e-4)


def test_strict_quadrature_rejects_non_integrable_tail() -> None:
    grid = _grid(256)
    d = Density(grid, grid.points**-1.5)

    with pytest.raises(DensityError):
        quadrature(d)
    assert np.isfinite(quadrature(d, strict=False))


def test_density_validates_values() -> None:
    grid = _grid(16)
    with pytest.raises(DensityError):
        Density(grid, -np.ones(16))
    with pytest.raises(DensityError):
        Density(grid, np.ones(15))
    with pytest.raises(DensityError):
        Density(grid, np.full(16, np.nan))

    d = constant_density(grid)
    with pytest.raises(ValueError):
        d.values[0] = 2.0


def test_normalize_and_l1_distance() -> None:
    grid = _grid()
    scaled = Density(grid, 3.0 * np.ones(grid.n_cells))

    assert quadrature(normalize(scaled)) == pytest.approx(1.0, abs=1e-12)
    assert l1_distance(constant_density(grid), monomial_density(grid, 1)) == pytest.approx(0.5, abs=1e-4)
    assert l1_distance(scaled, scaled) == 0.0
    with pytest.raises(DensityError):
        l1_distance(constant_density(grid), constant_density(_grid(512)))
    with pytest.raises(DensityError):
        normalize(Density(grid, np.zeros(grid.n_cells)))


def test_interpolation_reproduces_nodes_and_power_laws() -> None:
    grid = _grid()
    d = reference_density(grid, 0.5)

    assert interpolate(d, grid.points[10]) == pytest.approx(d.values[10], rel=1e-12)
    for y in (0.5 * grid.points[0], 1e-5, 3e-3):
        assert interpolate(d, y) == pytest.approx(0.5 * y**-0.5, rel=1e-9)
    with pytest.raises(InterpolationError):
        interpolate(d, 0.0)
    with pytest.raises(InterpolationError):
        interpolate(d, 1.5)


def test_interpolation_weights_agree_with_interpolate() -> None:
    grid = _grid()
    d = _mixture(grid)
    y = np.random.default_rng(7).uniform(1e-9, 1.0, size=500)

    lo, hi, w_lo, w_hi = interpolation_weights(d, y)

    np.testing.assert_allclose(w_lo * d.values[lo] + w_hi * d.values[hi], interpolate(d, y), rtol=1e-10)


def test_cumulative_matches_quadrature() -> None:
    grid = _grid()
    d = _mixture(grid)

    assert cumulative(d, 1.0) == pytest.approx(quadrature(d), rel=1e-12)
    assert cumulative(d, 0.0) == 0.0
    assert cumulative(constant_density(grid), 0.3) == pytest.approx(0.3, abs=1e-12)
    with pytest.raises(InterpolationError):
        cumulative(d, -0.1)


def test_coupling_functionals_by_family() -> None:
    d = constant_density(_grid())

    s_h, c_h = coupling_functionals(d, "coupled")
    assert s_h == pytest.approx(0.0, abs=1e-4)
    assert c_h == pytest.approx(0.0, abs=1e-4)

    s_h, c_h = coupling_functionals(d, "remark")
    assert s_h == pytest.approx(2.0 / np.pi, abs=1e-4)
    assert c_h == 0.0


def test_tail_sup_of_reference_density() -> None:
    d = reference_density(_grid(), 0.5)

    assert tail_sup(d, 0.5) == pytest.approx(0.5)


def test_density_csv_round_trip(tmp_path: Path) -> None:
    grid = _grid(256, 4.0)
    d = _mixture(grid)

    path = write_density_csv(d, tmp_path / "out" / "density.csv")
    loaded = read_density_csv(path)

    assert path.read_text(encoding="utf-8").splitlines()[0] == "x,value"
    assert loaded.grid == grid
    np.testing.assert_array_equal(loaded.values, d.values)


def test_density_csv_rejects_non_graded_nodes(tmp_path: Path) -> None:
    path = tmp_path / "bad.csv"
    path.write_text("x,value\n0.1,1\n0.2,1\n0.9,1\n1.0,1\n", encoding="utf-8")

    with pytest.raises(DensityError):
        read_density_csv(path)
