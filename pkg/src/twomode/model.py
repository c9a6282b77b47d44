"""Physical parameters, initial-state descriptors and time grids.

Units: hbar = 1, so frequencies and couplings share one inverse-time unit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class TruncationError(RuntimeError):
    """A truncated Fock space lost more weight than the declared budget."""


@dataclass(frozen=True)
class SystemParams:
    """Mode frequencies and the (possibly complex) beam-splitter coupling."""

    omega1: float
    omega2: float
    v12: complex = 0.0

    def __post_init__(self):
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise ValueError(f"frequencies must be positive, got {self.omega1}, {self.omega2}")
        object.__setattr__(self, "v12", complex(self.v12))
        if not np.isfinite(self.v12):
            raise ValueError("coupling must be finite")

    @property
    def coupling_strength(self) -> float:
        return abs(self.v12)

    def single_particle_matrix(self) -> np.ndarray:
        """The 2x2 one-excitation Hamiltonian [[w1, V], [V*, w2]]."""
        return np.array(
            [[self.omega1, self.v12], [self.v12.conjugate(), self.omega2]], dtype=complex
        )


@dataclass(frozen=True)
class InitialState:
    """Mode 1 in |alpha1>, mode 2 in D(alpha2) S(gamma e^{i theta}) |0>."""

    alpha1: complex = 0.0
    alpha2: complex = 0.0
    gamma: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha1", complex(self.alpha1))
        object.__setattr__(self, "alpha2", complex(self.alpha2))
        if not self.gamma >= 0:
            raise ValueError(f"squeezing magnitude gamma must be >= 0, got {self.gamma}")
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))

    @property
    def squeezing(self) -> complex:
        return self.gamma * complex(math.cos(self.theta), math.sin(self.theta))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid tau_k = t0 + k (t - t0) / n_steps, k = 0..n_steps."""

    t0: float
    t: float
    n_steps: int

    def __post_init__(self):
        if self.t < self.t0:
            raise ValueError(f"end time {self.t} precedes start time {self.t0}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def step(self) -> float:
        return (self.t - self.t0) / self.n_steps

    @property
    def points(self) -> np.ndarray:
        # linspace hits t exactly, so the last point never overshoots the end time
        return np.linspace(self.t0, self.t, self.n_steps + 1)

    def __len__(self) -> int:
        return self.n_steps + 1


def normal_mode_frequencies(params: SystemParams) -> tuple[float, float, float]:
    """Return (omega_plus, omega_minus, phi).

    phi = atan2(2|V12|, omega1 - omega2) lies in [0, pi], so the degenerate
    case omega1 == omega2 gives phi = pi/2 and cos^2(phi/2) is the weight of
    mode 1 on the upper normal mode.
    """
    w1, w2 = params.omega1, params.omega2
    g = params.coupling_strength
    mean = 0.5 * (w1 + w2)
    half_split = 0.5 * math.hypot(w1 - w2, 2.0 * g)
    phi = math.atan2(2.0 * g, w1 - w2)
    return mean + half_split, mean - half_split, phi
