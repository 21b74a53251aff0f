import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from permlp.core import scale_instance
from permlp.io import lookup_best, parse_qaplib

DATA_DIR = Path(__file__).parent / "data"
QAPLIB_DIR = DATA_DIR / "qaplib"


def load_instance(name: str):
    """Load a shipped QAPLIB fixture; skip-free, raises if missing."""
    path = QAPLIB_DIR / f"{name}.dat"
    a, b = parse_qaplib(path.read_text())
    return scale_instance(a, b, name=name, obj_best=lookup_best(name))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def nug12():
    return load_instance("nug12")


@pytest.fixture(scope="session")
def chr12c():
    return load_instance("chr12c")


def random_instance(seed: int, n: int, lo: int = 0, hi: int = 10):
    """Random integer QAP instance, scaled."""
    gen = np.random.default_rng(seed)
    a = gen.integers(lo, hi, size=(n, n)).astype(float)
    b = gen.integers(lo, hi, size=(n, n)).astype(float)
    if np.abs(a).max() == 0:
        a[0, 1] = 1.0
    if np.abs(b).max() == 0:
        b[1, 0] = 1.0
    return scale_instance(a, b, name=f"rand{n}_{seed}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
