from pathlib import Path

import pytest

from dpnsound.pnml import load_pnml
from dpnsound.smt import SmtGateway

MODELS = Path(__file__).resolve().parent.parent / "src" / "dpnsound" / "models"
FIXTURES = ["auction", "auction_reset", "auction_thresh", "road_fines", "sound_trivial"]


def model_path(name: str) -> Path:
    return MODELS / f"{name}.pnml"


@pytest.fixture(scope="session")
def gw():
    with SmtGateway() as g:
        yield g


@pytest.fixture(scope="session")
def nets():
    return {name: load_pnml(model_path(name)) for name in FIXTURES}


@pytest.fixture(scope="session")
def auction(nets):
    return nets["auction"]


# criterion number -> (passed, detail); filled by test_acceptance and echoed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
