import sys

import pytest

from edgestep import Constant, ExpNegLogDelta, InverseLogLog, InverseLogPower, PowerLaw

ALL_FAMILY_SPECS = [
    PowerLaw(c=1.0, gamma=0.0),
    PowerLaw(c=1.0, gamma=0.5),
    PowerLaw(c=3.0, gamma=0.75),
    PowerLaw(c=1.0, gamma=1.0),
    InverseLogPower(c=1.0, gamma=0.0),
    InverseLogPower(c=2.0, gamma=0.5),
    InverseLogLog(gamma=0.25),
    ExpNegLogDelta(sv_delta=0.5, gamma=0.5),
    Constant(p=0.5),
    Constant(p=1.0),
]

SUBCRITICAL_SPECS = [s for s in ALL_FAMILY_SPECS if s.gamma < 1.0]


@pytest.fixture(params=ALL_FAMILY_SPECS, ids=lambda s: f"{s.family}-{s.gamma}")
def any_spec(request):
    return request.param


@pytest.fixture(params=SUBCRITICAL_SPECS, ids=lambda s: f"{s.family}-{s.gamma}")
def subcritical_spec(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
