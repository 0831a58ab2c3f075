"""Tests for bound reports and stable report files."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from hgpartners import reports
from hgpartners.exceptions import BoundViolated
from hgpartners.reports import BoundReport


class TestBoundReport:
    """Tests for bound bookkeeping."""

    def test_slack(self) -> None:
        """Slack is rhs - lhs."""
        report = BoundReport()
        entry = report.add("sigma", 0.25, 1.0)
        assert entry.slack == 0.75
        assert entry.passed
        assert report["sigma"] is entry

    def test_rounding_tolerance(self) -> None:
        """Equality up to rounding still passes."""
        report = BoundReport()
        report.add("tight", 1.0 + 1e-14, 1.0)
        assert report.passed

    def test_violations(self) -> None:
        """Failing entries are listed and lower the minimum slack."""
        report = BoundReport()
        report.add("ok", 0.0, 1.0)
        report.add("bad", 2.0, 1.0)
        assert not report.passed
        assert [e.name for e in report.violations] == ["bad"]
        assert report.min_slack == -1.0

    def test_empty(self) -> None:
        """An empty report passes."""
        report = BoundReport()
        assert report.passed
        assert report.min_slack == math.inf

    def test_check_raises(self) -> None:
        """check should raise with the report attached."""
        report = BoundReport()
        report.add("eta", 3.0, 1.0)
        with pytest.raises(BoundViolated, match="closing: violated eta") as e:
            report.check("closing")
        assert e.value.report is report

    def test_extend_with_prefix(self) -> None:
        """Merged entries get the prefix."""
        inner = BoundReport()
        inner.add("sigma", 0.0, 1.0)
        outer = BoundReport()
        outer.extend(inner, prefix="first.")
        assert outer["first.sigma"].rhs == 1.0

    def test_missing_name(self) -> None:
        """Unknown names raise KeyError."""
        with pytest.raises(KeyError):
            _ = BoundReport()["action"]

    def test_to_dict(self) -> None:
        """Entries are listed with their slack."""
        report = BoundReport()
        report.add("action", 0.5, 1.0)
        data = report.to_dict()
        assert data["passed"] is True
        assert data["entries"][0]["slack"] == 0.5


class TestStableOutput:
    """Tests for deterministic serialization."""

    def test_format_real(self) -> None:
        """Reals use 17 significant digits."""
        assert reports.format_real(0.1) == "0.10000000000000001"
        assert reports.format_real(math.inf) == "null"
        assert reports.format_real(math.nan) == "null"

    def test_sorted_keys(self) -> None:
        """Keys are sorted at every level."""
        text = reports.dumps_stable({"b": 1, "a": {"d": 2, "c": 3}})
        assert text.index('"a"') < text.index('"b"')
        assert text.index('"c"') < text.index('"d"')
        assert json.loads(text) == {"a": {"c": 3, "d": 2}, "b": 1}

    def test_plain_values(self) -> None:
        """numpy values and objects with to_dict are converted."""
        report = BoundReport()
        report.add("x", 0.0, 1.0)
        data = json.loads(
            reports.dumps_stable(
                {
                    "array": np.array([1.5, 2.5]),
                    "flag": np.bool_(True),
                    "count": np.int64(3),
                    "report": report,
                    "path": Path("out"),
                }
            )
        )
        assert data["array"] == [1.5, 2.5]
        assert data["flag"] is True
        assert data["count"] == 3
        assert data["report"]["passed"] is True
        assert data["path"] == "out"

    def test_identical_runs(self, tmp_path: Path) -> None:
        """Writing the same data twice gives identical bytes."""
        obj = {"x": [0.1, 2.0 / 3.0], "y": None}
        first = reports.write_json(tmp_path / "a" / "r.json", obj)
        second = reports.write_json(tmp_path / "b" / "r.json", obj)
        assert first.read_bytes() == second.read_bytes()

    def test_write_csv(self, tmp_path: Path) -> None:
        """Reals in rows are formatted, other cells are kept."""
        path = reports.write_csv(
            tmp_path / "t.csv", ["t", "word"], [[0.5, "ab"], [math.inf, ""]]
        )
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines == ["t,word", "0.5,ab", "null,"]
