import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("bq", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("bq")


@pytest.fixture(scope="session", autouse=True)
def kernel_cache(tmp_path_factory):
    # keep the kernel table out of the user's home directory
    path = tmp_path_factory.mktemp("kernels") / "kernel_table.bin"
    old = os.environ.get("BQ_KERNEL_CACHE")
    os.environ["BQ_KERNEL_CACHE"] = str(path)
    yield path
    if old is None:
        os.environ.pop("BQ_KERNEL_CACHE", None)
    else:
        os.environ["BQ_KERNEL_CACHE"] = old


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def gaussian(grid, s, center=(0.0, 0.0, 0.0)):
    x1, x2, x3 = grid.axes()
    r2 = (x1 - center[0]) ** 2 + (x2 - center[1]) ** 2 + (x3 - center[2]) ** 2
    return (4 * np.pi * s) ** -1.5 * np.exp(-r2 / (4 * s))


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    lines = request.config.__dict__.setdefault("_bq_acceptance", {})

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        lines[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_bq_acceptance")
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
