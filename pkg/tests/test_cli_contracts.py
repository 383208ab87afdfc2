from __future__ import annotations

import json
from pathlib import Path

import pytest

from mflab.cli import build_parser, main


def test_cli_help_lists_every_experiment(capsys: pytest.CaptureFixture[str]) -> None:
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["--help"])
    output = capsys.readouterr().out
    for command in ("fixed-point", "converge", "ensemble", "verify-assumptions", "memory-loss", "perturbation"):
        assert command in output
    assert "mflab sequence-lemma" in output


def test_fixed_point_subcommand_keeps_expected_flags(capsys: pytest.CaptureFixture[str]) -> None:
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["fixed-point", "--help"])
    output = capsys.readouterr().out
    assert "--gamma-star" in output
    assert "--fit-window" in output
    assert "--inner-solver" in output


def test_unparsable_flag_exits_with_usage_code(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as excinfo:
        main(["converge", "--n-steps", "many"])

    assert excinfo.value.code == 1
    assert "error" in capsys.readouterr().err


def test_missing_command_prints_help(capsys: pytest.CaptureFixture[str]) -> None:
    assert main([]) == 1
    assert "usage: mflab" in capsys.readouterr().out


def test_invalid_config_is_reported_on_stderr(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["fixed-point", "--n-cells", "1000", "--output-dir", str(tmp_path)])

    assert code == 1
    assert "error: n_cells" in capsys.readouterr().err
    assert not (tmp_path / "report.json").exists()


def test_sequence_lemma_run_writes_a_passing_report(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["sequence-lemma", "--gamma-star", "0.4", "--output-dir", str(tmp_path)])

    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report["passed"] is True
    assert report["checks"] == {"conclusion": True, "hypothesis": True}
    assert report["results"]["instances"] == 100
    output = capsys.readouterr().out
    assert "mflab sequence-lemma | PASS" in output
    assert "[PASS] conclusion" in output
