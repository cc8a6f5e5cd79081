import pytest
from hypothesis import settings

from qcoupled import model, psa

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def table1():
    return model.build_network_model(model.table1_params())


@pytest.fixture(scope="session")
def table2():
    return model.build_network_model(model.table2_params(0.5, 0.5))


@pytest.fixture(scope="session")
def table1_series(table1):
    return psa.solve_model_psa(table1, 15)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""

    def add(number: int, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        print(ACCEPTANCE_LINES[-1])
        return ok

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
