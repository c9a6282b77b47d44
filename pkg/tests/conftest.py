import math

import numpy as np
import pytest
from scipy.linalg import expm

from twomode import InitialState, SystemParams


def propagator_expm(params: SystemParams, s: float) -> np.ndarray:
    """exp(-i M s) by scipy's Pade expm; independent of the closed forms."""
    return expm(-1j * params.single_particle_matrix() * s)


@pytest.fixture
def resonant():
    return SystemParams(1.0, 1.0, 1.0)


@pytest.fixture
def detuned_complex():
    return SystemParams(2.0, 1.0, 0.8 * np.exp(1j * math.pi / 3))


@pytest.fixture
def demo_state():
    return InitialState(0.5, 0.3, 1.0, 0.0)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
