import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record():
    def _record(criterion, ok, detail=""):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


@pytest.fixture
def slab_lens_case():
    from rangebound import BoundsVector, assemble

    A = np.array([[-1.0, 0.0], [1.0, 0.0]])
    b = BoundsVector([0.81, 0.81], [1.21, 1.21])
    return A, b, assemble(A)


def random_case(seed, n=2, m=4, err=0.05):
    """Anchors, in-bound plain relative readings, true location."""
    from rangebound import ErrorMode, Kind, MeasurementBatch, Scenario

    rng = np.random.default_rng(seed)
    A = rng.uniform(-1000, 1000, size=(m, n))
    x = rng.uniform(-100, 100, size=n)
    z = (1 + err * rng.uniform(-1, 1, m)) * np.linalg.norm(A - x, axis=1)
    return Scenario(A, MeasurementBatch(Kind.PLAIN, ErrorMode.RELATIVE, z, -err, err), x)
