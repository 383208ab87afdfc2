from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from mflab.app.services.config_service import resolve_config
from mflab.core.models import MapFamily, SequenceReport
from mflab.reporting.csv_export import write_coupling_csv, write_distances_csv, write_histogram_csv
from mflab.reporting.run_report import REPORT_SCHEMA, build_report_payload, to_jsonable, write_run_report


def test_to_jsonable_flattens_numpy_and_models() -> None:
    report = SequenceReport(
        hypothesis_holds=True, conclusion_holds=False, K=float("inf"), C_beta_gamma=2.5, maximizing_n=3, sigma_c=1.2
    )

    payload = to_jsonable(
        {
            "array": np.array([1.0, np.nan]),
            "count": np.int64(4),
            "flag": np.bool_(True),
            "family": MapFamily.REMARK_PM,
            "pair": (1, 2.5),
            "report": report,
            "path": Path("out") / "report.json",
        }
    )

    assert payload == {
        "array": [1.0, None],
        "count": 4,
        "flag": True,
        "family": "remark",
        "pair": [1, 2.5],
        "report": {
            "hypothesis_holds": True,
            "conclusion_holds": False,
            "K": None,
            "C_beta_gamma": 2.5,
            "maximizing_n": 3,
            "sigma_c": 1.2,
        },
        "path": "out/report.json",
    }
    json.dumps(payload, allow_nan=False)


def test_run_report_round_trips_through_json(tmp_path: Path) -> None:
    config = resolve_config("sequence-lemma", {"output_dir": str(tmp_path)})
    payload = build_report_payload(
        config=config,
        passed=True,
        checks={"conclusion": True},
        results={"max_K": float("inf"), "instances": 3},
        files=["b.csv", "a.csv"],
    )

    path = write_run_report(tmp_path, payload)
    loaded = json.loads(path.read_text(encoding="utf-8"))

    assert path.name == "report.json"
    assert loaded["schema"] == REPORT_SCHEMA
    assert loaded["command"] == "sequence-lemma"
    assert loaded["config"]["command"] == "sequence-lemma"
    assert loaded["config"]["output_dir"] == str(tmp_path)
    assert loaded["passed"] is True
    assert loaded["results"] == {"instances": 3, "max_K": None}
    assert loaded["files"] == ["a.csv", "b.csv"]
    assert loaded["created_at_utc"].endswith("Z")


def test_csv_tables_have_headers_and_rows(tmp_path: Path) -> None:
    distances = write_distances_csv(tmp_path / "d.csv", [(1, 0.5), (2, 0.25)], -1.0, 0.5)
    histogram = write_histogram_csv(tmp_path / "h.csv", np.linspace(0.0, 1.0, 5), np.array([1, 2, 3, 4]))
    coupling = write_coupling_csv(tmp_path / "c.csv", np.array([[0, 0.1, -0.2], [1, 0.15, -0.1]]))

    assert distances.read_text(encoding="utf-8").splitlines() == ["n,d_n,bound", "1,0.5,0.5", "2,0.25,0.25"]
    assert histogram.read_text(encoding="utf-8").splitlines()[0] == "bin_left,bin_right,count"
    assert histogram.read_text(encoding="utf-8").splitlines()[-1] == "0.75,1,4"
    lines = coupling.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "step,s,c"
    assert lines[2].startswith("1,0.14999")
