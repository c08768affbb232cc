import pytest

from ruinheun.params import BASELINE
from ruinheun.survival import solve

KAPPAS = (0.2, 0.4, 0.9)

_ACCEPTANCE_LINES = []


def record_acceptance(label: str, passed: bool, detail: str) -> None:
    _ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")


@pytest.fixture(scope="session")
def solutions():
    """Baseline solutions keyed by kappa, solved once per session."""
    cache = {}

    def get(kappa):
        if kappa not in cache:
            cache[kappa] = solve(BASELINE.with_kappa(kappa))
        return cache[kappa]

    return get


@pytest.fixture(scope="session")
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
