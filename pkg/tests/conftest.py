"""Shared fixtures for the stability-lab test suite.

Everything runs offline and deterministically: fixed grids, seeded
randomness, no defaults file unless a test writes one.
"""

import sys
from pathlib import Path

import pytest

# Ensure stability_lab/ is importable
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from stability_lab.coeffexpr.problem import Problem  # noqa: E402
from stability_lab.config import resolve_config  # noqa: E402
from tests.fixtures import SAMPLE_CONTROL, make_x  # noqa: E402


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """No RSL_DEFAULTS leaks in from the developer's shell."""
    monkeypatch.delenv("RSL_DEFAULTS", raising=False)


@pytest.fixture
def fast_config():
    """Coarser grid than the default; enough for the closed-form cases."""
    return resolve_config({"grid": 1000, "t_end": 20.0})


@pytest.fixture
def control_problem():
    """p = 2, q = 0: solutions 1 and exp(-2t), bounded but not vanishing."""
    return Problem.from_json(SAMPLE_CONTROL)


@pytest.fixture
def linear_x():
    """x(t) = t on [1, 100]."""
    return make_x("t", 1.0, 100.0, 4000)


@pytest.fixture
def defaults_file(tmp_path, monkeypatch):
    """Write a defaults JSON and point RSL_DEFAULTS at it."""
    def write(text: str) -> Path:
        path = tmp_path / "defaults.json"
        path.write_text(text)
        monkeypatch.setenv("RSL_DEFAULTS", str(path))
        return path
    return write
