import numpy as np
import pytest

from solwave import builtin_model, check_assumptions, make_grid, minimize, trial_field, trial_sigma
from solwave.solver import SolverConfig

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} | {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'} | {detail}")


@pytest.fixture(scope="session")
def scalar():
    return builtin_model("scalar_quartic_quintic")


@pytest.fixture(scope="session")
def coupled():
    return builtin_model("coupled_k2", {"p": 2.0, "q": 4.5, "masses": [1.0, 1.0]})


@pytest.fixture(scope="session")
def scalar_report(scalar):
    return check_assumptions(scalar)


@pytest.fixture(scope="session")
def bench_grid():
    return make_grid(3, 40.0, 2000)


@pytest.fixture(scope="session")
def bench_sigma(scalar, bench_grid):
    return trial_sigma(scalar, bench_grid, trial_field(bench_grid, [2.0 / 3.0], 12.0))


@pytest.fixture(scope="session")
def bench_result(scalar, bench_grid, bench_sigma, scalar_report):
    cfg = SolverConfig(grad_tolerance=1e-6)
    return minimize(scalar, bench_grid, bench_sigma, cfg, sqrt_2alpha=scalar_report.sqrt_2alpha, z_star=scalar_report.alpha_minimizer)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
