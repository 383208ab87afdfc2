"""User-invoked command entrypoints for mflab."""
from __future__ import annotations

from pathlib import Path

from ...presentation.summary_output import print_progress, print_summary
from ..services.config_service import CONFIG_KEYS, resolve_config
from ..services.experiment_workflow import ExperimentWorkflow

EXIT_PASSED = 0
EXIT_FAILED_CHECK = 2


def cmd_run(args) -> int:
    flags = {key: getattr(args, key, None) for key in CONFIG_KEYS}
    config_file = Path(args.config) if getattr(args, "config", None) else None
    config = resolve_config(args.command, flags, config_file)

    workflow = ExperimentWorkflow(on_progress=print_progress if getattr(args, "verbose", False) else None)
    outcome = workflow.run(config)
    print_summary(
        config.command.value,
        outcome.passed,
        outcome.checks,
        outcome.results,
        outcome.files,
        elapsed=outcome.elapsed,
        report_path=str(outcome.report_path) if outcome.report_path else None,
    )
    return EXIT_PASSED if outcome.passed else EXIT_FAILED_CHECK
