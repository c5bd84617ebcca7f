import sys
import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from cemkit.solver import add_solve_observer, remove_solve_observer, verify_kkt

settings.register_profile("suite", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")

sys.path.insert(0, str(Path(__file__).parent))

KKT_TOL = 1e-6


@pytest.fixture(autouse=True)
def kkt_audit(request):
    """Every optimal solve made during a test must carry a KKT certificate within 1e-6."""
    seen = []

    def check(problem, solution):
        if solution.optimal:
            seen.append((problem.name, solution.backend, verify_kkt(problem, solution).max_residual))

    add_solve_observer(check)
    yield seen
    remove_solve_observer(check)
    bad = [s for s in seen if s[2] > KKT_TOL]
    assert not bad, f"KKT residual above {KKT_TOL}: {bad[:5]}"


@pytest.fixture(scope="session")
def toy_dir(tmp_path_factory):
    """The toy system written once in the canonical layout."""
    from cemkit.ingest import write_system
    from helpers import toy_system

    return write_system(toy_system(), tmp_path_factory.mktemp("toy") / "system")


# -- acceptance report ---------------------------------------------------------------

ACCEPTANCE: list = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the lines are echoed in the terminal summary."""

    def record(number, title, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'} [{number}] {title}" + (f": {detail}" if detail else "")
        ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_sessionstart(session):
    session.config._cemkit_t0 = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
    elapsed = time.perf_counter() - config._cemkit_t0
    terminalreporter.write_line(f"{'PASS' if elapsed < 600 else 'FAIL'} [11] full suite runtime: {elapsed:.1f} s "
                                f"(limit 600 s)")
