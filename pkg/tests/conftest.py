import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, derandomize=True, print_blob=True)
settings.load_profile("default")

ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE[number] = (ok, detail)


@pytest.fixture
def model():
    from burstloc.inp_model import reference_model

    return reference_model()


@pytest.fixture
def graph(model):
    from burstloc.inp_model import build_directed_graph, default_flow_field

    return build_directed_graph(model, default_flow_field(model))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
