from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from ...core.config import settings
from ...core.errors import ConfigError
from ...core.models import ExperimentCommand, ExperimentConfig, SequenceBound
from ...core.policies import build_cone_params, build_grid_policy, build_rate_policy, build_solver_policy
from ...density.cone import cone_membership
from ...density.density import (
    Density,
    constant_density,
    monomial_density,
    normalize,
    reference_density,
    tail_sup,
)
from ...density.density_io import write_density_csv
from ...density.grid import GradedGrid
from ...dynamics.map_family import build_map_spec
from ...dynamics.services.assumption_verifier import sample_spec_box, verify_assumptions
from ...ensemble.particles import histogram, sample_ensemble, simulate
from ...rates.decay import fit_decay_exponent, split_windows
from ...rates.memory_loss import memory_loss_experiment
from ...rates.sequence_lemma import convolution_constant, saturating_sequence, verify_sequence_lemma
from ...reporting.csv_export import write_coupling_csv, write_distances_csv, write_histogram_csv
from ...reporting.run_report import build_report_payload, write_run_report
from ...transfer.distortion import random_cone_density
from ...transfer.fixed_point import FixedPointResult, convergence_experiment, solve_fixed_point
from ...transfer.perturbation import partial_derivative_bound_check, perturbation_decomposition

logger = logging.getLogger(__name__)

FIXED_POINT_RESIDUAL = 1e-5
LOCAL_EXPONENT_WINDOW = (1e-4, 1e-2)
LOCAL_EXPONENT_TOLERANCE = 0.05
TAIL_SLOPE_LIMIT = -0.8
MEMORY_LOSS_MARGIN = 0.3
KS_LIMIT = 0.02
PERTURBATION_PAIRS = 10
PERTURBATION_SPREAD = 0.10
ASSUMPTION_SAMPLES = 25
SEQUENCE_INSTANCES = 100
SEQUENCE_LENGTH = 200
SEQUENCE_BETAS = 5


@dataclass
class ExperimentOutcome:
    config: ExperimentConfig
    checks: dict[str, bool] = field(default_factory=dict)
    results: dict[str, Any] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)
    elapsed: float = 0.0
    report_path: Path | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


class ExperimentWorkflow:
    """Runs one configured experiment and writes its report and data files."""

    def __init__(self, on_progress: Callable[[str], None] | None = None) -> None:
        self.on_progress = on_progress
        self._handlers: dict[ExperimentCommand, Callable[[ExperimentOutcome], None]] = {
            ExperimentCommand.FIXED_POINT: self._fixed_point,
            ExperimentCommand.CONVERGE: self._converge,
            ExperimentCommand.ENSEMBLE: self._ensemble,
            ExperimentCommand.VERIFY_ASSUMPTIONS: self._verify_assumptions,
            ExperimentCommand.MEMORY_LOSS: self._memory_loss,
            ExperimentCommand.PERTURBATION: self._perturbation,
            ExperimentCommand.SEQUENCE_LEMMA: self._sequence_lemma,
        }

    def run(self, config: ExperimentConfig) -> ExperimentOutcome:
        started = time.monotonic()
        outcome = ExperimentOutcome(config=config)
        self._handlers[config.command](outcome)
        outcome.elapsed = time.monotonic() - started
        logger.debug("%s finished in %.1fs: %s", config.command.value, outcome.elapsed, outcome.checks)
        payload = build_report_payload(
            config=config,
            passed=outcome.passed,
            checks=outcome.checks,
            results=outcome.results,
            files=outcome.files,
        )
        outcome.report_path = write_run_report(Path(config.output_dir), payload)
        return outcome

    # -- shared pieces -------------------------------------------------

    def _grid(self, config: ExperimentConfig, n_cells: int | None = None) -> GradedGrid:
        grading = config.grading_q or build_grid_policy().grading_for(config.gamma_bounds[1])
        return GradedGrid(n_cells=n_cells or config.n_cells, grading_q=grading)

    def _solve(self, config: ExperimentConfig, grid: GradedGrid, initial: Density | None = None) -> FixedPointResult:
        policy = build_solver_policy(
            inner_solver=config.inner_solver,
            inner_tol=config.inner_tol,
            outer_tol=config.outer_tol,
        )
        return solve_fixed_point(
            config.family,
            config.gamma_star,
            config.epsilon,
            grid,
            initial=initial,
            policy=policy,
            on_progress=self.on_progress,
        )

    def _write_density(self, outcome: ExperimentOutcome, name: str, density: Density) -> None:
        path = write_density_csv(density, Path(outcome.config.output_dir) / f"density_{name}.csv")
        outcome.files.append(path.name)

    def _fit_window(self, config: ExperimentConfig) -> tuple[int, int]:
        lo, hi = config.fit_window or (build_rate_policy().fit_window_lo, config.n_steps)
        hi = min(hi, config.n_steps)
        if lo >= hi:
            raise ConfigError("fit_window", f"({lo}, {hi}) is empty for n_steps={config.n_steps}")
        return lo, hi

    # -- commands ------------------------------------------------------

    def _fixed_point(self, outcome: ExperimentOutcome) -> None:
        config = outcome.config
        grid = self._grid(config)
        result = self._solve(config, grid)
        h = result.density
        spec = build_map_spec(config.family, config.gamma_star, config.epsilon, *result.coupling)

        x = grid.points
        window = (x >= LOCAL_EXPONENT_WINDOW[0]) & (x <= LOCAL_EXPONENT_WINDOW[1])
        local_exponent = float(np.polyfit(np.log(x[window]), np.log(h.values[window]), 1)[0])
        cone_report = cone_membership(h, build_cone_params(config.gamma_bounds[1]), 1)

        outcome.checks.update(
            residual=result.residual <= FIXED_POINT_RESIDUAL,
            local_exponent=abs(local_exponent + spec.exponent) <= LOCAL_EXPONENT_TOLERANCE,
            tail=cone_report.tail_passed,
        )
        outcome.results.update(
            gamma_star=config.gamma_star,
            epsilon=config.epsilon,
            residual_l1=result.residual,
            coupling=list(result.coupling),
            effective_exponent=spec.exponent,
            local_exponent=local_exponent,
            tail_sup=tail_sup(h, spec.exponent),
            outer_iterations=result.outer_iterations,
            inner_iterations=result.inner_iterations,
            cone_report=cone_report,
        )
        self._write_density(outcome, "fixed_point", h)

    def _converge(self, outcome: ExperimentOutcome) -> None:
        config = outcome.config
        grid = self._grid(config)
        reference = self._solve(config, grid)
        report = convergence_experiment(
            constant_density(grid),
            reference,
            config.n_steps,
            config.family,
            config.gamma_star,
            config.epsilon,
            fit_window=self._fit_window(config),
            on_progress=self.on_progress,
        )
        _, back = split_windows(config.n_steps, report.fit_window[0])
        tail_slope, _ = fit_decay_exponent(report.distances, back)

        outcome.checks.update(bound=report.bound_satisfied, tail_slope=tail_slope <= TAIL_SLOPE_LIMIT)
        outcome.results.update(
            fixed_point_residual=reference.residual,
            coupling=list(reference.coupling),
            tail_slope=tail_slope,
            tail_window=list(back),
            convergence=report.model_dump(exclude={"distances"}),
        )
        path = write_distances_csv(
            Path(config.output_dir) / "distances_converge.csv",
            report.distances,
            report.bound_exponent,
            report.bound_constant,
        )
        outcome.files.append(path.name)
        self._write_density(outcome, "fixed_point", reference.density)

    def _ensemble(self, outcome: ExperimentOutcome) -> None:
        config = outcome.config
        grid = self._grid(config)
        reference = self._solve(config, grid)
        initial = sample_ensemble(constant_density(grid), config.n_particles, config.seed)
        run = simulate(
            initial,
            config.family,
            config.gamma_star,
            config.epsilon,
            config.n_steps,
            burn_in=config.burn_in,
            reference=reference.density,
            on_progress=self.on_progress,
        )
        output_dir = Path(config.output_dir)
        edges, counts = histogram(run.ensemble)
        coupling_path = write_coupling_csv(output_dir / "coupling_ensemble.csv", run.coupling_series)
        histogram_path = write_histogram_csv(output_dir / "histogram_final.csv", edges, counts)
        outcome.files.extend([coupling_path.name, histogram_path.name])

        outcome.checks.update(ks_distance=run.ks_distance is not None and run.ks_distance <= KS_LIMIT)
        outcome.results.update(
            N=run.ensemble.size,
            steps=run.ensemble.step_count,
            seed=config.seed,
            ks_distance=run.ks_distance,
            coupling_timeseries=coupling_path.name,
            final_coupling=run.coupling_series[-1, 1:].tolist(),
            fixed_point_coupling=list(reference.coupling),
        )

    def _verify_assumptions(self, outcome: ExperimentOutcome) -> None:
        config = outcome.config
        policy = build_grid_policy()
        grading = config.grading_q or policy.grading_for(config.gamma_bounds[1])
        grid = GradedGrid(n_cells=policy.assumption_grid_nodes, grading_q=grading)
        specs = sample_spec_box(config.family, config.gamma_star, config.eps_star, ASSUMPTION_SAMPLES, config.seed)
        report = verify_assumptions(
            specs,
            grid,
            gamma_star=config.gamma_star,
            eps_star=config.eps_star,
            r=settings.regularity_r,
            chi_star=settings.chi_star,
        )
        outcome.checks.update(
            c_gamma=report.c_gamma > 0,
            C_gamma=bool(np.isfinite(report.C_gamma)),
            C_d=bool(np.isfinite(report.C_d)),
            b=all(value > 0 for value in report.b),
        )
        outcome.results.update(assumptions=report)

    def _memory_loss(self, outcome: ExperimentOutcome) -> None:
        config = outcome.config
        grid = self._grid(config)
        f = constant_density(grid)
        g = monomial_density(grid, 1)
        report = memory_loss_experiment(
            f,
            g,
            [constant_density(grid), monomial_density(grid, 1)],
            config.n_steps,
            config.family,
            config.gamma_star,
            config.epsilon,
            fit_window=self._fit_window(config),
            on_progress=self.on_progress,
        )
        gamma = 1.0 / (1.0 - report.bound_exponent)
        limit = -1.0 / gamma + MEMORY_LOSS_MARGIN
        outcome.checks.update(bound=report.bound_satisfied, bounded_rate=report.fitted_exponent <= limit)
        outcome.results.update(
            gamma=gamma,
            exponent_limit=limit,
            convergence=report.model_dump(exclude={"distances"}),
        )
        path = write_distances_csv(
            Path(config.output_dir) / "distances_memory_loss.csv",
            report.distances,
            report.bound_exponent,
            report.bound_constant,
        )
        outcome.files.append(path.name)

    def _perturbation(self, outcome: ExperimentOutcome) -> None:
        config = outcome.config
        gamma_minus, gamma_plus = config.gamma_bounds
        beta = gamma_plus - gamma_minus
        coarse, fine = self._grid(config), self._grid(config, min(2 * config.n_cells, 65536))
        rng = np.random.default_rng(config.seed)
        pair_seeds = rng.integers(0, 2**32, size=(PERTURBATION_PAIRS, 2))

        def decompose(grid: GradedGrid, seeds: np.ndarray):
            h0 = random_cone_density(grid, config.gamma_star, np.random.default_rng(seeds[0]))
            h1 = random_cone_density(grid, config.gamma_star, np.random.default_rng(seeds[1]))
            v = normalize(reference_density(grid, config.gamma_star))
            result = perturbation_decomposition(
                v, h0, h1, config.family, config.gamma_star, config.epsilon, eps_star=config.eps_star, beta=beta
            )
            return v, result

        pairs = []
        for seeds in pair_seeds:
            _, coarse_result = decompose(coarse, seeds)
            _, fine_result = decompose(fine, seeds)
            ratios = (coarse_result.ratio, fine_result.ratio)
            scale = max(ratios)
            pairs.append(
                {
                    "ratio_coarse": ratios[0],
                    "ratio_fine": ratios[1],
                    "spread": abs(ratios[0] - ratios[1]) / scale if scale > 0 else 0.0,
                    "tail_sup": max(*coarse_result.tail_sups, *fine_result.tail_sups),
                }
            )

        v, first = decompose(coarse, pair_seeds[0])
        partial = None
        if first.f0 is not None and first.f1 is not None:
            partial = partial_derivative_bound_check(
                v, first.f0, first.f1, config.family, config.gamma_star, config.epsilon, eps_star=config.eps_star
            )
            self._write_density(outcome, "perturbation_f0", first.f0)
            self._write_density(outcome, "perturbation_f1", first.f1)

        outcome.checks.update(
            ratio_stable=all(pair["spread"] < PERTURBATION_SPREAD for pair in pairs),
            ratio_finite=all(np.isfinite(pair["ratio_coarse"]) and np.isfinite(pair["ratio_fine"]) for pair in pairs),
            tail_finite=all(np.isfinite(pair["tail_sup"]) for pair in pairs),
            partial_derivative=partial is None or partial.passed,
        )
        outcome.results.update(
            beta=beta,
            pairs=pairs,
            partial_derivative=vars(partial) if partial is not None else None,
            constants=first.constants,
        )

    def _sequence_lemma(self, outcome: ExperimentOutcome) -> None:
        config = outcome.config
        gamma = config.gamma_star
        rng = np.random.default_rng(config.seed)
        ceiling = min(gamma, 1.0 - gamma)
        betas = [ceiling * k / SEQUENCE_BETAS for k in range(SEQUENCE_BETAS)]
        horizon = build_rate_policy().sequence_horizon

        instances = []
        for _ in range(SEQUENCE_INSTANCES):
            beta = betas[int(rng.integers(len(betas)))]
            C, _ = convolution_constant(beta, gamma, horizon)
            sigma = float(rng.uniform(0.0, 0.95 / C))
            xi = float(rng.uniform(0.1, 2.0))
            delta0 = float(rng.uniform(0.0, 2.0))
            delta = saturating_sequence(xi, sigma, gamma, beta, delta0, SEQUENCE_LENGTH)
            report = verify_sequence_lemma(
                SequenceBound(xi=xi, sigma=sigma, gamma=gamma, beta=beta, delta=delta), horizon
            )
            instances.append(report)

        outcome.checks.update(
            hypothesis=all(report.hypothesis_holds for report in instances),
            conclusion=all(report.conclusion_holds for report in instances),
        )
        outcome.results.update(
            instances=len(instances),
            max_sigma_c=max(report.sigma_c for report in instances),
            C_beta_gamma={f"{beta:.6g}": convolution_constant(beta, gamma, horizon)[0] for beta in betas},
            max_K=max(report.K for report in instances),
        )
