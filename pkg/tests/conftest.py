"""Pytest configuration: src/ on the path and opt-in benchmark runs."""
from __future__ import annotations

import pathlib
import sys

import pytest

PROJECT_ROOT = pathlib.Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if SRC_PATH.exists() and str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", default=False, help="run the desk-scale benchmark tests")


def pytest_collection_modifyitems(config: pytest.Config, items) -> None:
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="benchmark run; pass --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def _isolated_output(monkeypatch: pytest.MonkeyPatch, tmp_path: pathlib.Path) -> None:
    """Runs that fall back to the environment write under the test's tmp_path."""
    monkeypatch.setenv("ALLSPEED_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.delenv("ALLSPEED_FORMATS", raising=False)
