import pytest

from lifshitz.potentials import SingleSiteModel
from lifshitz.randomness import CouplingDistribution

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def record():
    """Record one acceptance criterion outcome for the terminal summary."""

    def _record(name: str, ok: bool, detail: str = ""):
        _ACCEPTANCE.append((name, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def breather():
    return SingleSiteModel.characteristic_breather()


@pytest.fixture
def uniform01():
    return CouplingDistribution.uniform(0.0, 1.0)


@pytest.fixture
def coin():
    return CouplingDistribution.bernoulli(0.5)
