"""Bound bookkeeping and bit-stable report emission.

Every construction records the inequalities it verified in a
``BoundReport``. Reports and all other artifacts are written with sorted
keys and reals printed to 17 significant digits, so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import pathlib
from collections.abc import Iterable
from collections.abc import Sequence
from typing import Any

import numpy as np

from hgpartners.exceptions import BoundViolated

logger = logging.getLogger(__name__)

SLACK_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class BoundEntry:
    """One verified inequality lhs < rhs."""

    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.slack >= -SLACK_TOL

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
        }


@dataclasses.dataclass
class BoundReport:
    """Ordered list of bound checks with their slacks."""

    entries: list[BoundEntry] = dataclasses.field(default_factory=list)

    def add(self, name: str, lhs: float, rhs: float) -> BoundEntry:
        entry = BoundEntry(name, float(lhs), float(rhs))
        self.entries.append(entry)
        if not entry.passed:
            logger.debug(
                "Bound %s violated: %.6g >= %.6g", name, entry.lhs, entry.rhs
            )
        return entry

    def extend(self, other: BoundReport, prefix: str = "") -> None:
        for entry in other.entries:
            self.entries.append(
                dataclasses.replace(entry, name=prefix + entry.name)
            )

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    @property
    def violations(self) -> list[BoundEntry]:
        return [entry for entry in self.entries if not entry.passed]

    @property
    def min_slack(self) -> float:
        if not self.entries:
            return math.inf
        return min(entry.slack for entry in self.entries)

    def __getitem__(self, name: str) -> BoundEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def check(self, context: str = "bound check") -> None:
        """Raise if any entry has negative slack.

        Raises:
            BoundViolated: Carrying this report.
        """
        bad = self.violations
        if bad:
            names = ", ".join(entry.name for entry in bad)
            msg = f"{context}: violated {names}"
            raise BoundViolated(msg, report=self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "entries": [entry.to_dict() for entry in self.entries],
            "passed": self.passed,
        }


def _plain(obj: Any) -> Any:
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, list | tuple):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, bool | np.bool_):
        return bool(obj)
    if isinstance(obj, int | np.integer):
        return int(obj)
    if isinstance(obj, float | np.floating):
        return float(obj)
    if isinstance(obj, pathlib.Path):
        return str(obj)
    return obj


def _encode(obj: Any, indent: str) -> str:
    inner = indent + "  "
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(key)}: {_encode(obj[key], inner)}"
            for key in sorted(obj)
        ]
        return "{\n" + ",\n".join(items) + "\n" + indent + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [f"{inner}{_encode(v, inner)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + indent + "]"
    if isinstance(obj, float):
        return format_real(obj)
    return json.dumps(obj)


def format_real(x: float) -> str:
    """17 significant digits; non-finite reals become null."""
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps_stable(obj: Any) -> str:
    """Serialize to deterministic JSON text."""
    return _encode(_plain(obj), "") + "\n"


def write_json(path: pathlib.Path, obj: Any) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_stable(obj), encoding="utf-8")
    logger.debug("Wrote %s", path)
    return path


def write_csv(
    path: pathlib.Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> pathlib.Path:
    """Write rows with reals formatted by ``format_real``."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    format_real(float(v))
                    if isinstance(v, float | np.floating)
                    else v
                    for v in row
                ]
            )
    logger.debug("Wrote %s", path)
    return path
