from __future__ import annotations

from numbers import Integral, Real
from typing import Any


def format_elapsed(seconds: float) -> str:
    s = int(seconds)
    if s < 60:
        return f"{s}s"
    return f"{s // 60}m {s % 60}s"


def format_value(value: Any) -> str | None:
    """Short rendering of scalar results; None for anything structured."""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, Integral):
        return str(int(value))
    if isinstance(value, Real):
        return f"{float(value):.6g}"
    if isinstance(value, (list, tuple)) and value and all(isinstance(item, Real) for item in value):
        return "(" + ", ".join(f"{float(item):.6g}" for item in value) + ")"
    return None


def print_summary(
    command: str,
    passed: bool,
    checks: dict[str, bool],
    results: dict[str, Any],
    files: list[str],
    *,
    elapsed: float = 0,
    report_path: str | None = None,
) -> None:
    print(f"\n  {'=' * 56}")
    parts = [f"mflab {command}", "PASS" if passed else "FAIL"]
    if elapsed:
        parts.append(format_elapsed(elapsed))
    print(f"  {' | '.join(parts)}")
    print(f"  {'=' * 56}\n")

    for name, ok in checks.items():
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}")
    if checks:
        print()

    for name, value in results.items():
        text = format_value(value)
        if text is not None:
            print(f"  {name}: {text}")

    if files or report_path:
        print()
    for name in sorted(files):
        print(f"  wrote {name}")
    if report_path:
        print(f"  report: {report_path}")
    print()


def print_progress(message: str) -> None:
    print(f"  .. {message}", flush=True)
