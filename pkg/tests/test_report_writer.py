"""
报告输出测试
"""
import json
import math

import numpy as np
import pandas as pd
import pytest

from src.cli.schemas import Report, report_schema
from src.config.settings import REPORT_SCHEMA_PATH
from src.services.report_writer import (
    REPORT_FILE,
    TIMINGS_FILE,
    ReportWriter,
    dumps_report,
    to_plain,
)
from src.utils.errors import PreconditionError


class _Result:
    def to_dict(self):
        return {"value": np.float64(1.5)}


class TestToPlain:

    def test_numpy_values(self):
        out = to_plain({"a": np.int64(3), "b": np.array([1.0, 2.0]), "c": np.bool_(True), 4: (1, 2)})
        assert out == {"a": 3, "b": [1.0, 2.0], "c": True, "4": [1, 2]}
        assert type(out["a"]) is int

    def test_non_finite(self):
        assert to_plain([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]

    def test_dumps_sorted(self):
        assert dumps_report({"b": 1, "a": 2}).index('"a"') < dumps_report({"b": 1, "a": 2}).index('"b"')


class TestReportWriter:

    def test_duplicate_name(self, tmp_path):
        writer = ReportWriter(tmp_path, "check")
        writer.add("task", {"x": 1})
        with pytest.raises(PreconditionError):
            writer.add("task", {"x": 2})

    def test_to_dict_and_csv(self, tmp_path):
        writer = ReportWriter(tmp_path, "check", "seed = 0\n", 0)
        writer.add("task", _Result(), pd.DataFrame({"x": [0.1, 1.0 / 3.0]}))
        path = writer.write()
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["results"]["task"] == {"value": 1.5}
        assert data["files"] == ["task.csv"]
        assert data["config"] == "seed = 0\n"
        back = pd.read_csv(tmp_path / "task.csv", float_precision="round_trip")
        assert back["x"].iloc[1] == 1.0 / 3.0

    def test_timings_kept_out_of_report(self, tmp_path):
        writer = ReportWriter(tmp_path, "op")
        with writer.timed("scan"):
            pass
        writer.write()
        assert "scan" in json.loads((tmp_path / TIMINGS_FILE).read_text(encoding="utf-8"))
        assert "scan" not in (tmp_path / REPORT_FILE).read_text(encoding="utf-8")

    def test_deterministic(self, tmp_path):
        texts = []
        for name in ("a", "b"):
            writer = ReportWriter(tmp_path / name, "lemmas", "x = 1\n", 3)
            writer.add("sweep", {"ratio": 0.5, "history": [0.25, 0.5]})
            texts.append(writer.write().read_text(encoding="utf-8"))
        assert texts[0] == texts[1]

    def test_report_validates(self, tmp_path):
        writer = ReportWriter(tmp_path, "lp")
        writer.add("square_function", {"isometry_ratio": math.nan})
        Report.model_validate(to_plain(writer.report()))


class TestReportSchema:

    def test_published_schema_matches_model(self):
        published = json.loads(REPORT_SCHEMA_PATH.read_text(encoding="utf-8"))
        live = report_schema()
        assert set(published["properties"]) == set(live["properties"])
        assert published["required"] == live["required"]
        assert published["additionalProperties"] is False
        assert published["properties"]["command"]["enum"] == ["synth", "check", "op", "lp", "lemmas"]
