from __future__ import annotations

from pathlib import Path

import pytest

from mflab.app.services.config_service import parse_config_file, resolve_config
from mflab.core.config import settings
from mflab.core.errors import ConfigError
from mflab.core.models import ExperimentCommand, MapFamily


def test_defaults_come_from_settings() -> None:
    config = resolve_config("fixed-point", {})

    assert config.command is ExperimentCommand.FIXED_POINT
    assert config.n_cells == settings.n_cells
    assert config.gamma_star == settings.gamma_star
    assert config.family is MapFamily(settings.family)
    assert config.fit_window is None


def test_rate_commands_default_to_the_finer_grid() -> None:
    assert resolve_config("converge", {}).n_cells == settings.rate_n_cells
    assert resolve_config("memory-loss", {}).n_cells == settings.rate_n_cells
    assert resolve_config("ensemble", {}).n_cells == settings.n_cells


def test_flags_override_config_file(tmp_path: Path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text(
        "# converge run\n\nn-cells = 1024\nepsilon=0.02\nfit_window = 20 200\n",
        encoding="utf-8",
    )

    config = resolve_config("converge", {"epsilon": 0.01, "seed": None}, path)

    assert config.n_cells == 1024
    assert config.epsilon == 0.01
    assert config.fit_window == (20, 200)
    assert config.seed == settings.seed


def test_parse_config_file_rejects_unknown_keys(tmp_path: Path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text("bogus = 1\n", encoding="utf-8")

    with pytest.raises(ConfigError) as excinfo:
        parse_config_file(path)
    assert excinfo.value.field == "bogus"


def test_parse_config_file_rejects_malformed_lines(tmp_path: Path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text("epsilon 0.1\n", encoding="utf-8")

    with pytest.raises(ConfigError):
        parse_config_file(path)
    with pytest.raises(ConfigError):
        parse_config_file(tmp_path / "missing.cfg")


@pytest.mark.parametrize(
    ("flags", "field"),
    [
        ({"n_cells": 1000}, "n_cells"),
        ({"n_cells": 128}, "n_cells"),
        ({"gamma_star": 1.5}, "gamma_star"),
        ({"epsilon": 0.5}, "epsilon"),
        ({"eps_star": 0.3}, "eps_star"),
        ({"family": "remark", "epsilon": -0.05}, "epsilon"),
        ({"fit_window": [50, 10]}, "fit_window"),
        ({"inner_solver": "qr"}, "inner_solver"),
        ({"grading_q": 0.5}, "grading_q"),
    ],
)
def test_invalid_values_name_their_field(flags: dict, field: str) -> None:
    with pytest.raises(ConfigError) as excinfo:
        resolve_config("fixed-point", flags)

    assert excinfo.value.field == field
    assert str(excinfo.value).startswith(f"{field}: ")


def test_gamma_bounds_follow_eps_star() -> None:
    config = resolve_config("verify-assumptions", {"gamma_star": 0.5, "eps_star": 0.05})

    assert config.gamma_bounds == pytest.approx((0.4, 0.6))
