import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from capeuler.geometry import AnnulusShape, ellipse_curve, make_star_curve
from capeuler.laplace import SpectralDomain

settings.register_profile(
    "default", max_examples=15, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.register_profile("thorough", max_examples=100, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def disk():
    return SpectralDomain(make_star_curve([], 1.0, 64), 16)


@pytest.fixture(scope="session")
def ellipse():
    return SpectralDomain(ellipse_curve(1.2, 1.0, 128), 32)


@pytest.fixture(scope="session")
def annulus():
    return SpectralDomain(AnnulusShape(make_star_curve([], 1.0, 64), make_star_curve([], 2.0, 64)), 24)


def rel(a, b):
    b = np.asarray(b)
    return float(np.max(np.abs(np.asarray(a) - b)) / max(np.max(np.abs(b)), 1e-300))


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
