"""Closed-form nonequilibrium Green functions of mode 1.

u(tau, t0) is the amplitude mode 1 keeps, v0(tau, t0) the amplitude it
receives from mode 2; v1(tau, t) and v2(tau, t) are the squeezing-induced
terms that tie the path at tau to the end point t (they vanish for gamma = 0).
All functions accept scalar or array ``tau``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .model import InitialState, SystemParams, TimeGrid, normal_mode_frequencies

RESONANCE_RTOL = 1e-9


def _as_elapsed(t0, tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < t0):
        raise ValueError("tau must not precede t0")
    return tau - t0


def _scalar_or_array(x):
    return x.item() if np.ndim(x) == 0 else x


def _detunings(params: SystemParams) -> tuple[float, float]:
    """(omega_plus - omega2, omega_minus - omega2) without cancellation.

    Their product is -|V12|^2, so the small one is recovered from the large one.
    """
    half_diff = 0.5 * (params.omega1 - params.omega2)
    half_split = 0.5 * math.hypot(params.omega1 - params.omega2, 2.0 * params.coupling_strength)
    g2 = params.coupling_strength ** 2
    if half_diff >= 0:
        d_plus = half_diff + half_split
        d_minus = -g2 / d_plus if d_plus > 0 else 0.0
    else:
        d_minus = half_diff - half_split
        d_plus = -g2 / d_minus
    return d_plus, d_minus


def _mode_weights(phi: float) -> tuple[float, float]:
    return math.cos(0.5 * phi) ** 2, math.sin(0.5 * phi) ** 2


def u_of(params: SystemParams, t0: float, tau):
    """u(tau, t0) = cos^2(phi/2) e^{-i w+ (tau-t0)} + sin^2(phi/2) e^{-i w- (tau-t0)}."""
    s = _as_elapsed(t0, tau)
    w_plus, w_minus, phi = normal_mode_frequencies(params)
    c_plus, c_minus = _mode_weights(phi)
    out = c_plus * np.exp(-1j * w_plus * s) + c_minus * np.exp(-1j * w_minus * s)
    return _scalar_or_array(out)


def v0_of(params: SystemParams, t0: float, tau):
    """v0(tau, t0) = -i V12 int_{t0}^{tau} u(tau, t1) e^{-i w2 (t1 - t0)} dt1, integrated exactly.

    Each normal mode contributes -V12 c e^{-i w2 s} (1 - e^{-i d s}) / d with
    d = w_pm - w2; at |d| below ``RESONANCE_RTOL`` times the largest
    frequency scale the term is replaced by its limit -i V12 c s e^{-i w2 s}.
    """
    s = _as_elapsed(t0, tau)
    v = params.v12
    if v == 0:
        return _scalar_or_array(np.zeros_like(s, dtype=complex))
    _, _, phi = normal_mode_frequencies(params)
    weights = _mode_weights(phi)
    scale = max(params.omega1, params.omega2, params.coupling_strength)
    carrier = np.exp(-1j * params.omega2 * s)
    out = np.zeros_like(s, dtype=complex)
    for c, d in zip(weights, _detunings(params)):
        if c == 0.0:
            continue
        if abs(d) < RESONANCE_RTOL * scale:
            out = out - 1j * v * c * s * carrier
        else:
            out = out + v * c * carrier * np.expm1(-1j * d * s) / d
    return _scalar_or_array(out)


def _check_end_time(tau, t):
    if np.any(np.asarray(tau) > t):
        raise ValueError("tau must not exceed the end time t")


def v1_of(params: SystemParams, state: InitialState, t0: float, tau, t: float):
    """v1(tau, t) = sinh^2(gamma) v0(tau, t0) conj(v0(t, t0))."""
    _check_end_time(tau, t)
    if state.gamma == 0:
        return _scalar_or_array(np.zeros_like(_as_elapsed(t0, tau), dtype=complex))
    amp = math.sinh(state.gamma) ** 2
    return _scalar_or_array(amp * np.asarray(v0_of(params, t0, tau)) * np.conj(v0_of(params, t0, t)))


def v2_of(params: SystemParams, state: InitialState, t0: float, tau, t: float):
    """v2(tau, t) = sinh(2 gamma) e^{i theta} / 4 * v0(tau, t0) v0(t, t0)."""
    _check_end_time(tau, t)
    if state.gamma == 0:
        return _scalar_or_array(np.zeros_like(_as_elapsed(t0, tau), dtype=complex))
    amp = 0.25 * math.sinh(2 * state.gamma) * np.exp(1j * state.theta)
    return _scalar_or_array(amp * np.asarray(v0_of(params, t0, tau)) * v0_of(params, t0, t))


def single_particle_propagator(params: SystemParams, t0: float, tau: float) -> np.ndarray:
    """The 2x2 unitary exp(-i M (tau - t0)) rebuilt from u and v0 alone.

    Uses the SU(2)-times-phase structure: the second row is
    (-det conj(v0), det conj(u)) with det = exp(-i (w1 + w2)(tau - t0)).
    """
    u = u_of(params, t0, tau)
    v0 = v0_of(params, t0, tau)
    det = np.exp(-1j * (params.omega1 + params.omega2) * (tau - t0))
    return np.array([[u, v0], [-det * np.conj(v0), det * np.conj(u)]], dtype=complex)


@dataclass(frozen=True)
class CorrelationKernels:
    """Two-time correlations mode 2 imprints on mode 1."""

    params: SystemParams
    state: InitialState
    t0: float = 0.0

    def g(self, tau, tau_p):
        return self.params.coupling_strength ** 2 * np.exp(
            -1j * self.params.omega2 * (np.asarray(tau) - tau_p)
        )

    def g_tilde(self, tau, tau_p):
        return math.sinh(self.state.gamma) ** 2 * self.g(tau, tau_p)

    def g_bar(self, tau, tau_p):
        w2, st = self.params.omega2, self.state
        pref = 0.25 * math.sinh(2 * st.gamma) * np.exp(1j * (st.theta + 2 * w2 * self.t0))
        return pref * self.params.v12 ** 2 * np.exp(-1j * w2 * (np.asarray(tau) + tau_p))


@dataclass(frozen=True)
class GreensSolution:
    grid: TimeGrid
    u: np.ndarray
    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.grid.points

    @property
    def unitarity(self) -> np.ndarray:
        return np.abs(self.u) ** 2 + np.abs(self.v0) ** 2

    @property
    def future_influence(self) -> np.ndarray:
        """|v1(tau, t)| + |v2(tau, t)|: weight of the end point on the path at tau."""
        return np.abs(self.v1) + np.abs(self.v2)

    @property
    def max_future_influence(self) -> float:
        return float(self.future_influence.max())


def solve_greens(params: SystemParams, state: InitialState, grid: TimeGrid) -> GreensSolution:
    taus = grid.points
    return GreensSolution(
        grid=grid,
        u=np.asarray(u_of(params, grid.t0, taus)),
        v0=np.asarray(v0_of(params, grid.t0, taus)),
        v1=np.asarray(v1_of(params, state, grid.t0, taus, grid.t)),
        v2=np.asarray(v2_of(params, state, grid.t0, taus, grid.t)),
    )


def _memory_term(params: SystemParams, grid: TimeGrid, f: np.ndarray) -> np.ndarray:
    # int_{t0}^{tau} g(tau, tau') f(tau') dtau' with g factorised in tau, tau'
    s = grid.points - grid.t0
    w2 = params.omega2
    inner = cumulative_trapezoid(np.exp(1j * w2 * s) * f, dx=grid.step, initial=0.0)
    return params.coupling_strength ** 2 * np.exp(-1j * w2 * s) * inner


def _residual(params: SystemParams, grid: TimeGrid, f: np.ndarray, rhs: np.ndarray) -> float:
    if len(grid) < 3:
        raise ValueError("residual needs at least 3 grid points")
    h = grid.step
    dfdt = (f[2:] - f[:-2]) / (2 * h)
    lhs = dfdt + 1j * params.omega1 * f[1:-1] + _memory_term(params, grid, f)[1:-1]
    return float(np.max(np.abs(lhs - rhs[1:-1])))


def residual_u(params: SystemParams, grid: TimeGrid) -> float:
    """Max |du/dtau + i w1 u + int g u| over interior points (centered differences, trapezoid memory)."""
    u = np.asarray(u_of(params, grid.t0, grid.points))
    return _residual(params, grid, u, np.zeros_like(u))


def residual_v0(params: SystemParams, grid: TimeGrid) -> float:
    """As :func:`residual_u` for the driven equation with source -i V12 e^{-i w2 (tau - t0)}."""
    s = grid.points - grid.t0
    v0 = np.asarray(v0_of(params, grid.t0, grid.points))
    source = -1j * params.v12 * np.exp(-1j * params.omega2 * s)
    return _residual(params, grid, v0, source)
