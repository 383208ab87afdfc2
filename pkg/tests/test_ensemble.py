from __future__ import annotations

import numpy as np
import pytest

from mflab.core.errors import DensityError
from mflab.density.density import constant_density, monomial_density
from mflab.density.grid import GradedGrid
from mflab.dynamics.map_family import build_map_spec, eval_map
from mflab.ensemble.particles import (
    Ensemble,
    _mean,
    empirical_coupling,
    ensemble_step,
    histogram,
    ks_distance,
    sample_ensemble,
    simulate,
)


def _grid() -> GradedGrid:
    return GradedGrid(n_cells=512, grading_q=4.0)


def test_sampling_is_reproducible_and_matches_density() -> None:
    h = constant_density(_grid())

    first = sample_ensemble(h, 10_000, seed=1)
    again = sample_ensemble(h, 10_000, seed=1)

    np.testing.assert_array_equal(first.positions, again.positions)
    assert first.size == 10_000
    assert first.step_count == 0
    assert np.all((first.positions >= 0.0) & (first.positions < 1.0))
    assert ks_distance(first, h) < 0.03


def test_ks_distance_detects_the_wrong_density() -> None:
    grid = _grid()
    e = sample_ensemble(monomial_density(grid, 1), 10_000, seed=2)

    assert ks_distance(e, constant_density(grid)) > 0.15
    assert ks_distance(e, monomial_density(grid, 1)) < 0.03


def test_empirical_coupling_of_uniform_sample_is_small() -> None:
    e = sample_ensemble(constant_density(_grid()), 20_000, seed=3)

    s, c = empirical_coupling(e, "coupled")
    assert abs(s) < 0.05 and abs(c) < 0.05

    s, c = empirical_coupling(e, "remark")
    assert s == pytest.approx(2.0 / np.pi, abs=0.02)
    assert c == 0.0


def test_coupling_mean_ignores_particle_order() -> None:
    rng = np.random.default_rng(4)
    values = rng.uniform(-1.0, 1.0, size=112_345)
    shuffled = rng.permutation(values)

    assert _mean(values) == pytest.approx(float(np.mean(values)), abs=1e-14)
    assert _mean(shuffled) == _mean(values)
    assert _mean(values[::-1]) == _mean(values)


def test_relabelled_particles_follow_the_same_trajectory() -> None:
    rng = np.random.default_rng(11)
    positions = rng.random(1_000)
    original = Ensemble(positions=positions, rng_seed=11)
    relabelled = Ensemble(positions=rng.permutation(positions), rng_seed=11)

    first = simulate(original, "coupled", 0.5, 0.05, 300, burn_in=0)
    second = simulate(relabelled, "coupled", 0.5, 0.05, 300, burn_in=0)

    np.testing.assert_array_equal(first.coupling_series, second.coupling_series)
    np.testing.assert_array_equal(np.sort(first.ensemble.positions), np.sort(second.ensemble.positions))


def test_ensemble_step_moves_every_particle_with_one_map() -> None:
    e = sample_ensemble(constant_density(_grid()), 2_000, seed=5)
    s, c = empirical_coupling(e, "coupled")
    spec = build_map_spec("coupled", 0.5, 0.05, s_h=s, c_h=c)

    following = ensemble_step(e, 0.5, 0.05, "coupled")

    assert following.step_count == 1
    assert following.rng_seed == e.rng_seed
    np.testing.assert_array_equal(following.positions, eval_map(spec, e.positions))


def test_simulation_is_deterministic_and_records_coupling() -> None:
    grid = _grid()
    initial = sample_ensemble(constant_density(grid), 2_000, seed=6)

    run = simulate(initial, "coupled", 0.5, 0.05, 20, burn_in=5, reference=constant_density(grid), snapshot_every=10)
    again = simulate(initial, "coupled", 0.5, 0.05, 20, burn_in=5)

    assert run.coupling_series.shape == (25, 3)
    np.testing.assert_array_equal(run.coupling_series[:, 0], np.arange(25))
    np.testing.assert_array_equal(run.coupling_series, again.coupling_series)
    np.testing.assert_array_equal(run.ensemble.positions, again.ensemble.positions)
    assert run.ensemble.step_count == 25
    assert [step for step, _, _ in run.snapshots] == [15, 25]
    assert run.ks_distance is not None and 0.0 <= run.ks_distance <= 1.0
    assert again.ks_distance is None


def test_histogram_counts_every_particle() -> None:
    e = sample_ensemble(constant_density(_grid()), 5_000, seed=7)

    edges, counts = histogram(e, bins=20)

    assert edges.shape == (21,)
    assert counts.sum() == 5_000
    assert edges[0] == 0.0 and edges[-1] == 1.0


@pytest.mark.parametrize("positions", [[], [0.2, 1.0], [-0.1, 0.5], [np.nan]])
def test_ensemble_rejects_invalid_positions(positions: list[float]) -> None:
    with pytest.raises(DensityError):
        Ensemble(positions=np.array(positions, dtype=float), rng_seed=0)


def test_ensemble_positions_are_read_only() -> None:
    e = Ensemble(positions=np.array([0.1, 0.5]), rng_seed=0)

    with pytest.raises(ValueError):
        e.positions[0] = 0.3


@pytest.mark.parametrize(("position", "expected"), [(0.0, (0.0, 1.0)), (0.25, (1.0, 0.0))])
def test_coupling_of_a_point_mass(position: float, expected: tuple[float, float]) -> None:
    e = Ensemble(positions=np.full(10, position), rng_seed=0)

    assert empirical_coupling(e, "coupled") == pytest.approx(expected, abs=1e-15)


def test_degenerate_ensemble_stays_degenerate() -> None:
    e = Ensemble(positions=np.full(50, 0.3), rng_seed=0)

    following = ensemble_step(e, 0.5, 0.05, "coupled")

    assert np.unique(following.positions).size == 1


def test_uncoupled_step_is_the_plain_map() -> None:
    e = sample_ensemble(constant_density(_grid()), 1_000, seed=8)

    following = ensemble_step(e, 0.5, 0.0, "coupled")

    np.testing.assert_array_equal(following.positions, eval_map(build_map_spec("coupled", 0.5, 0.0), e.positions))
