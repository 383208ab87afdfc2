from __future__ import annotations


class MflabError(Exception):
    """Base class for every failure raised by mflab."""


class SpecValidationError(MflabError):
    pass


class DensityError(MflabError):
    pass


class InterpolationError(DensityError):
    pass


class AssumptionError(MflabError):
    """A non-finite intermediate appeared while certifying the map assumptions."""

    def __init__(self, message: str, *, x: float, ell: int, j: int) -> None:
        super().__init__(f"{message} at x={x!r}, l={ell}, j={j}")
        self.x = x
        self.ell = ell
        self.j = j


class ConvergenceError(MflabError):
    def __init__(self, message: str, *, last_residual: float) -> None:
        super().__init__(f"{message} (last residual {last_residual:.3e})")
        self.last_residual = last_residual


class FitError(MflabError):
    pass


class ConfigError(MflabError):
    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class ConeError(DensityError):
    """An input density lies outside the cone an experiment starts from."""

    def __init__(self, name: str, *, k: int, margins: dict[str, float], mass: float) -> None:
        failing = ", ".join(f"{key}={value:.3g}" for key, value in margins.items() if value < 0) or f"mass={mass:.6g}"
        super().__init__(f"{name} is outside D^{k}_1 ({failing})")
        self.name = name
        self.k = k
        self.margins = margins
