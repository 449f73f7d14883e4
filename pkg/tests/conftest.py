import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tslasso.synth import RigidEthanolSpec, SwissRollSpec, rigid_ethanol, swiss_roll  # noqa: E402


@pytest.fixture(scope="session")
def roll():
    return swiss_roll(SwissRollSpec(n=2000, seed=0))


@pytest.fixture(scope="session")
def ethanol():
    return rigid_ethanol(RigidEthanolSpec(n=2000, seed=0))


@pytest.fixture(scope="session")
def small_ethanol():
    return rigid_ethanol(RigidEthanolSpec(n=400, seed=1))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
