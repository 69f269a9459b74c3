import numpy as np
import pytest

from superhost.config import SketchConfig

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_cfg():
    # L = 30, ep = [10, 10, 10], cp = [1, 1, 2]
    return SketchConfig(r=2, num_ra=3, num_va=1, g=16, cbn=(11, 11, 12, 4), clbs=(0, 10, 20),
                        mangle_a=0x2545F491, mangle_b=0x1234567, va_seeds=(0xDEADBEEF,),
                        bv_seed=0xFEEDFACE)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pairs(rng, n, hosts=None):
    if hosts is None:
        iip = rng.integers(0, 1 << 32, n, dtype=np.uint64).astype(np.uint32)
    else:
        iip = rng.choice(np.asarray(hosts, dtype=np.uint32), n)
    oip = rng.integers(0, 1 << 32, n, dtype=np.uint64).astype(np.uint32)
    return iip, oip
