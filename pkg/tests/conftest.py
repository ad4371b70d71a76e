import time

import numpy as np
import pytest

from porocrack import config as config_mod
from porocrack.runner import Problem, run_sweep

ACCEPTANCE = {}


def _record(criterion, passed, detail):
    ACCEPTANCE[str(criterion)] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("ab")), k)):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def record():
    """``record(criterion, passed, detail)`` adds a line to the acceptance summary."""
    return _record


# Percent differences between +beta and -beta are a few hundredths of a
# percent, below the stopping error of the default Picard tolerance.
DESK_PICARD_TOL = 1e-8


@pytest.fixture(scope="session")
def desk_config():
    return config_mod.load(None, [f"solver.tol={DESK_PICARD_TOL}"])


@pytest.fixture(scope="session")
def desk_problem(desk_config):
    return Problem(desk_config)


@pytest.fixture(scope="session")
def desk_sweep(desk_problem, desk_config):
    t0 = time.perf_counter()
    betas = [float(b) for b in desk_config["material"]["beta_list"]]
    results = run_sweep(desk_problem, betas)
    elapsed = time.perf_counter() - t0
    return {r.beta: r for r in results}, elapsed


@pytest.fixture(scope="session")
def small_config():
    """Coarse cracked plate used by the quicker end-to-end tests."""
    return config_mod.load(None, [
        "geometry.plate.nx=20", "geometry.plate.ny=20", "geometry.plate.nz=2",
        "geometry.plate.refinement_levels=0", "probes.samples=20",
        "material.beta_list=[0, -2, 2]"])


@pytest.fixture(scope="session")
def small_problem(small_config):
    return Problem(small_config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
