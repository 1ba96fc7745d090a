import pytest

from dpgpml.app import RunConfig, run_experiment
from dpgpml.mesh import build_lshape_mesh


@pytest.fixture(scope="session")
def default_mesh():
    return build_lshape_mesh()


@pytest.fixture(scope="session")
def acoustics_a_run():
    return run_experiment(RunConfig(physics="acoustics_A"))


@pytest.fixture(scope="session")
def small_config():
    # coarse, low order L-shape run used by fast solver and app tests
    return RunConfig(physics="acoustics_A", p=2, n_int=4, n_pml=2, omega=2.0 * 3.141592653589793)


ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Store one acceptance line; the summary hook prints them after the run."""

    def _record(criterion, passed, detail):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
