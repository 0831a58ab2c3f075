"""Shared fixtures for unit tests."""

from __future__ import annotations

import os

import pytest

from hgpartners.fuchsian import SurfaceGroup
from hgpartners.fuchsian import octagon_group


@pytest.fixture(scope="session")
def grp() -> SurfaceGroup:
    """The octagon group with the default ball, built once."""
    return octagon_group()


@pytest.fixture
def clean_env(monkeypatch: pytest.MonkeyPatch) -> pytest.MonkeyPatch:
    """Remove HGPARTNERS_* variables inherited from the shell."""
    for key in list(os.environ):
        if key.startswith("HGPARTNERS_"):
            monkeypatch.delenv(key)
    return monkeypatch
