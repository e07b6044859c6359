import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from axbl.spectral import GridSpec, ScalarField, VectorField

settings.register_profile(
    "axbl", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("axbl")


@pytest.fixture(scope="session")
def g16():
    return GridSpec(16, 8.0)


@pytest.fixture(scope="session")
def g32():
    return GridSpec(32, 8.0)


@pytest.fixture(scope="session")
def g64():
    return GridSpec(64, 8.0)


def random_scalar(g, seed=0):
    return ScalarField(g, np.random.default_rng(seed).standard_normal(g.shape))


def random_vector(g, seed=0):
    return VectorField(g, np.random.default_rng(seed).standard_normal((3,) + g.shape))


def gaussian(g, c=(0.0, 0.0, 0.0), w2=1.0, amp=1.0):
    x1, x2, x3 = g.coords()
    r2 = (x1 - c[0]) ** 2 + (x2 - c[1]) ** 2 + (x3 - c[2]) ** 2
    return ScalarField(g, amp * np.exp(-r2 / w2) * np.ones(g.shape))


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


SESSION_START = time.perf_counter()
ACCEPTANCE: dict = {}


def record(crit: str, ok: bool, detail: str) -> bool:
    """Store one acceptance line; the summary hook prints them after the run."""
    line = f"{crit:5s} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[crit] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for crit in sorted(ACCEPTANCE, key=lambda c: int(c[2:])):
            terminalreporter.write_line(ACCEPTANCE[crit])
