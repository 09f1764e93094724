import pytest

from bergcomp.fixtures import fixture


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance_log(request):
    """Record a one-line pass/fail summary printed at the end of the run."""
    lines = request.config._acceptance_lines

    def record(number, ok, detail):
        lines.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ex_bidisc():
    return fixture("ex_bidisc")


@pytest.fixture(scope="session")
def identity2d():
    return fixture("identity2d")
