import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from converse_hji.cases import sys_a_spec, sys_b_spec  # noqa: E402
from converse_hji.design import synthesize  # noqa: E402

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"


@pytest.fixture(scope="session")
def spec_a():
    return sys_a_spec()


@pytest.fixture(scope="session")
def spec_b():
    return sys_b_spec()


@pytest.fixture(scope="session")
def sys_a(spec_a):
    return synthesize(spec_a)


@pytest.fixture(scope="session")
def sys_b(spec_b):
    return synthesize(spec_b)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
