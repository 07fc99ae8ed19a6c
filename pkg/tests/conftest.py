import math

import numpy as np
import pytest

from selberg_lab import fuchsian as fu

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n = int(mark.args[0])
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        ok = rep.passed
        _CRITERIA.setdefault(n, []).append((item.name, ok))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        runs = _CRITERIA[n]
        bad = [name for name, ok in runs if not ok]
        line = f"criterion {n}: {'PASS' if not bad else 'FAIL'} ({len(runs) - len(bad)}/{len(runs)} checks)"
        if bad:
            line += " failing: " + ", ".join(bad)
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bolza():
    return fu.bolza_group()


@pytest.fixture(scope="session")
def bolza_sample(bolza):
    return bolza.dirichlet_sample(4000, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SYSTOLE = 2 * math.acosh(1 + math.sqrt(2))
