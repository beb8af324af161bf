import numpy as np
import pytest

from mamcast.channel import (
    PathComponent,
    PositionGrid,
    ScenarioRng,
    UserChannelModel,
    dbm_to_watt,
    sample_scenario,
    wavelength_from_ghz,
)

LAMBDA = wavelength_from_ghz(5.0)
NOISE = float(dbm_to_watt(-95.0))
POWER = float(dbm_to_watt(10.0))

# (criterion, passed, detail) lines filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid25():
    return PositionGrid.square(25, LAMBDA)


def random_channels(rng, K, N):
    return (rng.normal(size=(K, N)) + 1j * rng.normal(size=(K, N))) / np.sqrt(2)


def random_direction(rng):
    theta, phi = rng.uniform(0, np.pi, 2)
    return np.array([np.sin(theta) * np.cos(phi), np.cos(theta)])


def los_user(rng, gain=1.0, noise=1.0):
    theta, phi = rng.uniform(0, np.pi, 2)
    return UserChannelModel((PathComponent(complex(gain), float(theta), float(phi)),), noise)


def default_scenario(seed, stream=0, K=5, L=4):
    return sample_scenario(ScenarioRng(seed, stream), K, L, 150.0, 5.0, NOISE)
