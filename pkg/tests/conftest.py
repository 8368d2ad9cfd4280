import pytest

from kfw.arith import build_tables


@pytest.fixture(scope="session")
def tables_1e4():
    """Tables for k = 1, 2, 3 up to 10^4 + 2."""
    return {k: build_tables(10_002, k) for k in (1, 2, 3)}


@pytest.fixture(scope="session")
def small_tables():
    return {k: build_tables(5000, k) for k in (1, 2)}


_LINES = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one pass/fail line per acceptance criterion; printed after the run."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(number, ok, detail):
        lines.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
