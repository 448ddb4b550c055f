from __future__ import annotations

import json
from pathlib import Path

import pytest

from evtolplan import load_instance
from evtolplan.model import prepare

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_updates(name: str) -> list:
    return json.loads((FIXTURES / name).read_text())


@pytest.fixture(scope="session")
def base():
    return load_instance(FIXTURES / "base.json")


@pytest.fixture(scope="session")
def case3c():
    return load_instance(FIXTURES / "case3c.json")


@pytest.fixture(scope="session")
def desk():
    return load_instance(FIXTURES / "desk.json")


@pytest.fixture(scope="session")
def desk_prep(desk):
    return prepare(desk)


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}: {title} ({detail})")
