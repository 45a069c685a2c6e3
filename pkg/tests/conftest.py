import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vortexlab.evolution import compute_theta_field, evolve
from vortexlab.profile import DefaultProfile
from vortexlab.sdf import build_initial_data, compact_bump, gaussian

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=40,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

# acceptance results: criterion number -> list of (part, passed, detail)
ACCEPTANCE = {}


def record(criterion, part, passed, detail):
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")
        for part, passed, detail in parts:
            tr.write_line(f"    [{'pass' if passed else 'FAIL'}] {part}: {detail}")


@pytest.fixture(scope="session")
def profile():
    return DefaultProfile()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(int(os.environ.get("VORTEXLAB_SEED", "20240607")))


@pytest.fixture(scope="session")
def data_k2(profile):
    return build_initial_data(2, gaussian(0.0, 1.0), profile=profile)


@pytest.fixture(scope="session")
def field_k2(data_k2):
    """Theta field for Gaussian data at k = 2 on the default lattice (h = 1/32)."""
    return compute_theta_field(2, data_k2, h=1.0 / 32)


@pytest.fixture(scope="session")
def evolution_k2(field_k2):
    return evolve(field_k2, times=[0.0, 1.0, 2.0, 4.0, 8.0, 10.0, 16.0, 32.0])


@pytest.fixture(scope="session")
def field_k2_right(profile):
    """Theta field for data supported in [0.5, 2.5], so f_0 vanishes left of 0."""
    data = build_initial_data(2, compact_bump(1.5, 1.0), profile=profile)
    return compute_theta_field(2, data, h=1.0 / 32)


@pytest.fixture(scope="session")
def evolution_k2_right(field_k2_right):
    return evolve(field_k2_right, times=[0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
