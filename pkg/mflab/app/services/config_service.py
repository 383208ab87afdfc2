from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping

from pydantic import ValidationError

from ...core.config import settings
from ...core.errors import ConfigError
from ...core.models import ExperimentCommand, ExperimentConfig

CONFIG_KEYS = (
    "gamma_star",
    "epsilon",
    "eps_star",
    "family",
    "n_cells",
    "grading_q",
    "n_steps",
    "n_particles",
    "burn_in",
    "seed",
    "output_dir",
    "fit_window",
    "inner_tol",
    "outer_tol",
    "inner_solver",
)

# Rate studies default to the finer grid unless n_cells is given explicitly.
_RATE_COMMANDS = {ExperimentCommand.CONVERGE, ExperimentCommand.MEMORY_LOSS}


def settings_defaults(command: ExperimentCommand) -> dict[str, Any]:
    return {
        "gamma_star": settings.gamma_star,
        "epsilon": settings.epsilon,
        "eps_star": settings.eps_star,
        "family": settings.family,
        "n_cells": settings.rate_n_cells if command in _RATE_COMMANDS else settings.n_cells,
        "grading_q": settings.grading_q,
        "n_steps": settings.n_steps,
        "n_particles": settings.n_particles,
        "burn_in": settings.burn_in,
        "seed": settings.seed,
        "output_dir": settings.output_dir,
        "fit_window": None,
        "inner_tol": settings.inner_tol,
        "outer_tol": settings.outer_tol,
        "inner_solver": settings.inner_solver,
    }


def parse_config_file(path: Path) -> dict[str, str]:
    """Plain `key=value` lines; blank lines and `#` comments are skipped, dashes in keys allowed."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc

    values: dict[str, str] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{number}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(key, f"unknown key in {path}:{number}")
        values[key] = value
    return values


def _file_value(key: str, value: str) -> Any:
    if key == "fit_window":
        parts = value.replace(",", " ").split()
        if len(parts) != 2:
            raise ConfigError(key, f"expected two integers, got {value!r}")
        return tuple(parts)
    return value


def _first_error(exc: ValidationError) -> ConfigError:
    error = exc.errors()[0]
    message = str(error.get("msg", "invalid value")).removeprefix("Value error, ")
    location = error.get("loc") or ()
    if location:
        return ConfigError(str(location[0]), message)
    field, _, rest = message.partition(": ")
    if rest:
        return ConfigError(field, rest)
    return ConfigError("config", message)


def resolve_config(
    command: ExperimentCommand | str,
    flags: Mapping[str, Any],
    config_file: Path | None = None,
) -> ExperimentConfig:
    """settings defaults < key=value file < command-line flags (None means not given)."""
    command = ExperimentCommand(command)
    values = settings_defaults(command)
    if config_file is not None:
        for key, value in parse_config_file(config_file).items():
            values[key] = _file_value(key, value)
    for key in CONFIG_KEYS:
        flag = flags.get(key)
        if flag is not None:
            values[key] = tuple(flag) if key == "fit_window" else flag
    try:
        return ExperimentConfig(command=command, **values)
    except ValidationError as exc:
        raise _first_error(exc) from exc
