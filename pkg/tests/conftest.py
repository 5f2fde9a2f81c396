import pytest

import kellyalloc as ka
from helpers import coinflip_company, mixed_companies

# One line per acceptance criterion, echoed after the run so they survive
# pytest's output capture regardless of pass/fail.
_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def coinflip():
    return coinflip_company()


@pytest.fixture(scope="session")
def coinflip_five():
    return [coinflip_company(f"flip-{i}") for i in range(1, 6)]


@pytest.fixture(scope="session")
def coinflip_space(coinflip_five):
    return ka.enumerate_outcomes(coinflip_five)


@pytest.fixture(scope="session")
def coinflip_single_space(coinflip):
    return ka.enumerate_outcomes([coinflip])


@pytest.fixture(scope="session")
def mixed():
    return mixed_companies()


@pytest.fixture(scope="session")
def mixed_space(mixed):
    return ka.enumerate_outcomes(mixed)


@pytest.fixture(scope="session")
def config():
    return ka.SolverConfig(worker_count=1)
