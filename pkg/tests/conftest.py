import numpy as np
import pytest

from wildgevrey import DatumSpec, KernelSpec, Mode, build_cutoff, make_grid, realize
from wildgevrey.wild import wild_trajectory

# criterion number -> (status, detail); filled in by test_acceptance
ACCEPTANCE = {}
# coefficient statistics of every Wild run made through the shared fixtures
COEFFICIENT_STATS = []

SNAPSHOT_TIMES = [0.0, 0.5, 1.0, 2.0, 5.0]
KERNELS = {Mode.KAC: KernelSpec.kac_power(2.0), Mode.BOLTZMANN: KernelSpec.maxwell()}


def record(criterion, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE[criterion] = (status, detail)
    print(f"ACCEPTANCE criterion {criterion}: {status} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {status}  {detail}")


class RunCache:
    """Memoised Wild runs shared between tests."""

    def __init__(self):
        self._store = {}

    def wild(self, mode, datum="mixture", level=5.0, M=257, rmax=16.0, n_nodes=64,
             times=tuple(SNAPSHOT_TIMES), accuracy=1e-8):
        key = (mode, datum, level, M, rmax, n_nodes, tuple(times), accuracy)
        if key not in self._store:
            grid = make_grid(mode, rmax, M)
            spec = {"mixture": DatumSpec.mixture(mode=mode), "gaussian": DatumSpec.gaussian(mode),
                    "bump": DatumSpec.bump(1.0, 2.0)}[datum]
            f0 = realize(spec, grid)
            kernel = build_cutoff(KERNELS[mode], level, n_nodes)
            run = wild_trajectory(f0, kernel, list(times), accuracy)
            COEFFICIENT_STATS.append((key, run.diagnostics["coefficients"]))
            self._store[key] = (f0, kernel, run)
        return self._store[key]


@pytest.fixture(scope="session")
def runs():
    return RunCache()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
