"""Shared fixtures: the repository root on sys.path, builtin data and goldens."""

import json
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

import cache  # noqa: E402
import config  # noqa: E402
from builtin_types import get_builtin  # noqa: E402


@pytest.fixture(autouse=True)
def isolated_output(tmp_path, monkeypatch):
    """Reports go to a temporary directory and no count cache is active."""
    monkeypatch.setattr(config, "REPORTS_DIR", tmp_path / "reports")
    cache.configure(None)
    yield
    cache.configure(None)


@pytest.fixture
def a1():
    return get_builtin("A1").datum()


@pytest.fixture
def a2():
    return get_builtin("A2").datum()


@pytest.fixture
def a3():
    return get_builtin("A3").datum()


@pytest.fixture
def b2():
    return get_builtin("B2").datum()


@pytest.fixture
def b3():
    return get_builtin("B3").datum()


@pytest.fixture
def c3():
    return get_builtin("C3").datum()


@pytest.fixture
def g2():
    return get_builtin("G2").datum()


@pytest.fixture
def golden():
    def load(name: str) -> dict:
        return json.loads((ROOT / "goldens" / f"{name}.json").read_text(encoding="utf-8"))

    return load
