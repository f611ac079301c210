import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = {}


class _Line:
    def __init__(self):
        self.key, self.title, self.text, self.passed = None, "", "", False

    def __call__(self, key, title):
        self.key, self.title = key, title
        ACCEPTANCE_LINES[key] = self
        return self

    def detail(self, text):
        self.text = text


@pytest.fixture
def criterion(request):
    """Summary line for an acceptance criterion: ``criterion(n, title)``
    then ``.detail(text)``; PASS/FAIL comes from the test outcome."""
    line = _Line()
    request.node._criterion = line
    return line


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    line = getattr(item, "_criterion", None)
    if line is not None and rep.when == "call":
        line.passed = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        line = ACCEPTANCE_LINES[key]
        status = "PASS" if line.passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {key:>2}. {line.title}: {line.text}")
