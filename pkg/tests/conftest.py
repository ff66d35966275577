import numpy as np
import pytest

from mobkit.bench import generate

_CRITERIA: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str = ""):
    _CRITERIA.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def laptop42():
    return generate("laptop", 42, 2048)


@pytest.fixture(scope="session")
def drawer42():
    return generate("drawer", 42, 2048)


@pytest.fixture(scope="session")
def swivel7():
    return generate("swivel_chair", 7, 2048)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
