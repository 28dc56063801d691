import numpy as np
import pytest

from csfkit import CharacteristicFunction

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(name, passed, detail)``."""
    def _report(name, passed, detail=""):
        _ACCEPTANCE.append((name, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def random_cf(n, seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    values = rng.random(1 << n)
    return CharacteristicFunction(values, n)


@pytest.fixture
def make_cf():
    return random_cf
