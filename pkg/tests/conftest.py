import warnings

import pytest

# lines reported by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    def add(criterion, passed, summary):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {summary}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split(":")[0]):
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _quiet_series_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield
