"""Shared fixtures for command-line runs into a temporary directory."""

from __future__ import annotations

import json
import os
from collections.abc import Callable
from pathlib import Path
from typing import Any

import pytest

from hgpartners.cli import main

Runner = Callable[..., int]


@pytest.fixture
def out_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Output directory of the run, with a clean environment."""
    for key in list(os.environ):
        if key.startswith("HGPARTNERS_"):
            monkeypatch.delenv(key)
    return tmp_path / "out"


@pytest.fixture
def run(out_dir: Path) -> Runner:
    """Run one subcommand with its reports written to out_dir."""

    def _run(command: str, *flags: str) -> int:
        return main([command, "--out", str(out_dir), *flags])

    return _run


@pytest.fixture
def report(out_dir: Path) -> Callable[[str], Any]:
    """Read a JSON report written by the run."""

    def _read(name: str) -> Any:
        return json.loads((out_dir / name).read_text(encoding="utf-8"))

    return _read
