import pytest

from qzeta import QContext, ZCache

# acceptance outcomes, filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def ctx():
    return QContext.make("0.5", 256)


@pytest.fixture(scope="session")
def cache():
    """One memo for the whole run; the heavy sweeps share sub-words."""
    return ZCache()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}: {detail}")
