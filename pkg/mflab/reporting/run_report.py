"""report.json artifacts for mflab runs."""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from ..core.models import ExperimentConfig

REPORT_SCHEMA = 1
REPORT_NAME = "report.json"


def _iso_now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become null."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump(mode="python"))
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if math.isfinite(number) else None
    if isinstance(value, Path):
        return value.as_posix()
    return value


def build_report_payload(
    *,
    config: ExperimentConfig,
    passed: bool,
    checks: dict[str, bool],
    results: dict[str, Any],
    files: list[str],
) -> dict[str, Any]:
    return {
        "schema": REPORT_SCHEMA,
        "created_at_utc": _iso_now(),
        "command": config.command.value,
        "config": to_jsonable(config),
        "passed": bool(passed),
        "checks": to_jsonable(checks),
        "results": to_jsonable(results),
        "files": sorted(files),
    }


def write_run_report(output_dir: Path, payload: dict[str, Any]) -> Path:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    report_path = output_dir / REPORT_NAME
    text = json.dumps(payload, indent=2, ensure_ascii=True, sort_keys=True, allow_nan=False)
    report_path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return report_path
