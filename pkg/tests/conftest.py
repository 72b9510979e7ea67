"""Shared fixtures and the acceptance-summary reporter."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import kkbeam as kb

settings.register_profile(
    "kkbeam",
    deadline=None,  # first calls may hit numba compilation
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("kkbeam")

# (criterion number, passed, detail) tuples appended by tests/test_acceptance.py
ACCEPTANCE_RESULTS = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((number, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")


@pytest.fixture(scope="session")
def table1_array():
    # 192-element linear probe settings used throughout the examples
    return kb.TransducerArray(192, 0.23e-3, 5.2e6, 20.83e6, 0.67)


@pytest.fixture(scope="session")
def small_array():
    return kb.TransducerArray(64, 0.23e-3, 5.2e6, 20.83e6, 0.67)


@pytest.fixture(scope="session")
def pulse52():
    return kb.make_pulse(5.2e6, 0.67, 20.83e6)


@pytest.fixture(scope="session")
def point_dataset(small_array, pulse52):
    """Small three-scatterer acquisition shared by beamformer tests.

    Geometry chosen so the element pitch is an exact multiple of the
    grid pitch (pitch = 4 dx), which makes the offset-grid hypot table
    land on exact nodes.
    """
    params = kb.AcquisitionParams(
        1540.0, kb.transmit_angles(7, np.deg2rad(12)), 1024
    )
    phantom = kb.Phantom(
        np.array([0.0, 1.1e-3, -0.9e-3]),
        np.array([9e-3, 11e-3, 12.5e-3]),
        np.array([1.0, 0.7, 0.9]),
    )
    rf = kb.simulate_rf(small_array, params, phantom, pulse52)
    dx = 0.23e-3 / 4
    grid = kb.ImageGrid(-32 * dx + dx / 2, 7e-3, dx, 0.1e-3, 64, 64)
    return small_array, params, rf, grid
