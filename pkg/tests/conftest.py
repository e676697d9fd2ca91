import pytest

from lrpolymer import stable_walk as sw

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def law2():
    return sw.build_increment_law(2.0)


@pytest.fixture(scope="session")
def law15():
    return sw.build_increment_law(1.5)


@pytest.fixture(scope="session")
def verdicts(pytestconfig):
    """Collects one ``PASS``/``FAIL`` line per acceptance criterion."""
    return pytestconfig.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in sorted(lines, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(ln)
