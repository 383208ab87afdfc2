from __future__ import annotations

import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class MapFamily(str, Enum):
    COUPLED_PM = "coupled"
    REMARK_PM = "remark"


class Branch(str, Enum):
    LEFT = "left"
    RIGHT = "right"


def rising_factorial(value: float, order: int) -> float:
    """value (value + 1) ... (value + order - 1); the ratio |g^(l)| x^l / g of x^-value."""
    return math.prod(value + m for m in range(order))


class AssumptionConstants(BaseModel):
    model_config = ConfigDict(frozen=True)

    c_gamma: float = Field(gt=0)
    C_gamma: float = Field(gt=1)
    gamma: float = Field(gt=0, lt=1)
    C_d: float = Field(gt=0)
    b: list[float]
    chi_star: float = Field(gt=0, le=1)
    r: int = Field(ge=2)
    gamma_minus: float = Field(gt=0, lt=1)
    gamma_plus: float = Field(gt=0, lt=1)

    @model_validator(mode="after")
    def _check_b(self) -> AssumptionConstants:
        if len(self.b) != self.r:
            raise ValueError(f"expected {self.r} b constants, got {len(self.b)}")
        if any(not value > 0 for value in self.b):
            raise ValueError("all b constants must be strictly positive")
        if self.gamma != self.gamma_plus:
            raise ValueError("gamma must equal gamma_plus")
        return self


class MonomialBound(BaseModel):
    """Measured infimum of one (l, j, monomial) instance of the C^r distortion condition."""

    ell: int
    j: int
    monomial: str
    b: float
    worst_x: float


class AssumptionReport(BaseModel):
    passed: bool
    family: MapFamily
    gamma_star: float
    eps_star: float
    spec_count: int
    grid_nodes: int
    c_gamma: float
    C_gamma: float
    C_d: float
    b: list[float]
    entries: list[MonomialBound]
    constants: AssumptionConstants | None = None


class ConeParams(BaseModel):
    """Constants (r, a_1..a_r, A, chi*, gamma) of the invariant density cones."""

    model_config = ConfigDict(frozen=True)

    r: int = Field(ge=1)
    a: list[float]
    A: float = Field(gt=0)
    chi_star: float = Field(gt=0, le=1)
    gamma: float = Field(gt=0, lt=1)

    @model_validator(mode="after")
    def _check_reference_margin(self) -> ConeParams:
        if len(self.a) != self.r:
            raise ValueError(f"expected {self.r} derivative constants, got {len(self.a)}")
        if any(not value > 0 for value in self.a):
            raise ValueError("derivative constants must be strictly positive")
        # (1 - gamma) x^-gamma must sit inside the cone with halved constants.
        for ell, value in enumerate(self.a, start=1):
            needed = 2.0 * rising_factorial(self.gamma, ell)
            if value < needed:
                raise ValueError(f"a_{ell}={value} leaves no margin for the reference density (needs >= {needed:.4g})")
        if self.A < 2.0:
            raise ValueError("A must be at least 2 so the reference density passes with A/2")
        return self

    def chi(self, x, order: int):
        return np.minimum(np.asarray(x, dtype=float) ** order, self.chi_star)


class ConeReport(BaseModel):
    passed: bool
    derivative_passed: bool
    tail_passed: bool
    normalized: bool
    k: int
    mass: float
    worst_margins: dict[str, float]
    worst_nodes: dict[str, float]


class PerturbationConstants(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float = Field(ge=0)
    C_beta: float = Field(gt=0)
    gamma_minus: float
    gamma_plus: float

    @model_validator(mode="after")
    def _check_beta(self) -> PerturbationConstants:
        gamma = self.gamma_plus
        if not self.beta < min(gamma, 1.0 - gamma):
            raise ValueError(f"beta={self.beta} must be below min(gamma, 1 - gamma) for gamma={gamma}")
        return self


class ConvergenceReport(BaseModel):
    distances: list[tuple[int, float]]
    fit_window: tuple[int, int]
    fitted_exponent: float
    fitted_constant: float
    bound_exponent: float
    bound_constant: float
    bound_satisfied: bool
    worst_excess: float

    @model_validator(mode="after")
    def _check_window(self) -> ConvergenceReport:
        if any(distance < 0 for _, distance in self.distances):
            raise ValueError("distances must be nonnegative")
        if self.distances:
            lo, hi = self.fit_window
            first, last = self.distances[0][0], self.distances[-1][0]
            if lo < first or hi > last:
                raise ValueError(f"fit window {self.fit_window} outside recorded range [{first}, {last}]")
        return self


class SequenceBound(BaseModel):
    xi: float = Field(gt=0)
    sigma: float = Field(ge=0)
    gamma: float = Field(gt=0, lt=1)
    beta: float = Field(ge=0)
    C_beta_gamma: float | None = None
    delta: list[float]

    @model_validator(mode="after")
    def _check_beta(self) -> SequenceBound:
        if not self.beta < min(self.gamma, 1.0 - self.gamma):
            raise ValueError("beta must be below min(gamma, 1 - gamma)")
        if any(value < 0 or not math.isfinite(value) for value in self.delta):
            raise ValueError("delta must be a finite nonnegative sequence")
        return self


class SequenceReport(BaseModel):
    hypothesis_holds: bool
    conclusion_holds: bool
    K: float
    C_beta_gamma: float
    maximizing_n: int
    sigma_c: float


class ExperimentCommand(str, Enum):
    FIXED_POINT = "fixed-point"
    CONVERGE = "converge"
    ENSEMBLE = "ensemble"
    VERIFY_ASSUMPTIONS = "verify-assumptions"
    MEMORY_LOSS = "memory-loss"
    PERTURBATION = "perturbation"
    SEQUENCE_LEMMA = "sequence-lemma"


class ExperimentConfig(BaseModel):
    """Fully resolved configuration of one CLI experiment."""

    model_config = ConfigDict(frozen=True)

    command: ExperimentCommand
    gamma_star: float = Field(gt=0, lt=1)
    epsilon: float
    eps_star: float = Field(ge=0)
    family: MapFamily
    n_cells: int
    grading_q: float = Field(ge=0)
    n_steps: int = Field(ge=1)
    n_particles: int = Field(ge=1)
    burn_in: int = Field(ge=0)
    seed: int
    output_dir: str
    fit_window: tuple[int, int] | None = None
    inner_tol: float = Field(gt=0)
    outer_tol: float = Field(gt=0)
    inner_solver: str

    @field_validator("n_cells")
    @classmethod
    def _check_n_cells(cls, value: int) -> int:
        if not 256 <= value <= 65536 or value & (value - 1):
            raise ValueError(f"{value} must be a power of two between 256 and 65536")
        return value

    @field_validator("grading_q")
    @classmethod
    def _check_grading(cls, value: float) -> float:
        if value and value < 1:
            raise ValueError("must be >= 1, or 0 for automatic grading")
        return value

    @field_validator("inner_solver")
    @classmethod
    def _check_solver(cls, value: str) -> str:
        if value not in ("direct", "power"):
            raise ValueError(f"must be 'direct' or 'power', got {value!r}")
        return value

    @field_validator("fit_window")
    @classmethod
    def _check_fit_window(cls, value: tuple[int, int] | None) -> tuple[int, int] | None:
        if value is not None and not 1 <= value[0] < value[1]:
            raise ValueError(f"{value} must satisfy 1 <= lo < hi")
        return value

    # Cross-field failures are prefixed with the field they blame.
    @model_validator(mode="after")
    def _check_box(self) -> ExperimentConfig:
        gamma_minus, gamma_plus = self.gamma_bounds
        if not 0.0 < gamma_minus < gamma_plus < 1.0:
            raise ValueError(f"eps_star: {self.eps_star} pushes gamma bounds ({gamma_minus:.4g}, {gamma_plus:.4g}) out of (0, 1)")
        if abs(self.epsilon) > self.eps_star:
            raise ValueError(f"epsilon: |{self.epsilon}| exceeds eps_star={self.eps_star}")
        if self.family is MapFamily.REMARK_PM and self.epsilon < 0:
            raise ValueError("epsilon: the remark family needs epsilon >= 0")
        return self

    @property
    def gamma_bounds(self) -> tuple[float, float]:
        return self.gamma_star - 2.0 * self.eps_star, self.gamma_star + 2.0 * self.eps_star
