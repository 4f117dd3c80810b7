import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rulesfirst.core import Dataset

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def tiny():
    """Three examples over two features."""
    return Dataset(np.array([[1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]), [1, -1, 1])
