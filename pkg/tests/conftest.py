import json
from pathlib import Path

import pytest

from qchain_sim import chain
from qchain_sim.rng import make_rng

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def golden():
    return json.loads((ROOT / "tests" / "golden" / "golden.json").read_text())


@pytest.fixture(scope="session")
def mined_chain():
    """A valid 10-block chain at difficulty 8, mined once per session."""
    return chain.build_chain(10, 8, make_rng(99, "fixture-chain"))


@pytest.fixture
def rng():
    return make_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
