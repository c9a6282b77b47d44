"""Exact reduced dynamics of two beam-splitter-coupled bosonic modes."""
from .model import InitialState, SystemParams, TimeGrid, TruncationError, normal_mode_frequencies
from .greens import GreensSolution, solve_greens, u_of, v0_of, v1_of, v2_of
from .reduced_state import FockMatrix, ReducedStateCoefficients, coefficients, rho1_fock

__all__ = [
    "FockMatrix",
    "GreensSolution",
    "InitialState",
    "ReducedStateCoefficients",
    "SystemParams",
    "TimeGrid",
    "TruncationError",
    "coefficients",
    "normal_mode_frequencies",
    "rho1_fock",
    "solve_greens",
    "u_of",
    "v0_of",
    "v1_of",
    "v2_of",
]
