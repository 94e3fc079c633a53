import math
from importlib import resources

import pytest
from hypothesis import HealthCheck, settings

from cutlocus import parse_tree

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ALPHAS = (2 * math.pi, 1.5 * math.pi, 2 * math.pi / 3)


def bundled(name: str):
    return parse_tree(resources.files("cutlocus.data").joinpath(name).read_bytes())


@pytest.fixture
def fig3_tree():
    return bundled("fig3.json")


@pytest.fixture
def fig4_tree():
    return bundled("fig4.json")


@pytest.fixture
def fig5_tree():
    return bundled("fig5_class.json")


@pytest.fixture
def fig6_tree():
    return bundled("fig6_class.json")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
