import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import propagator_expm
from twomode import InitialState, SystemParams, TimeGrid, greens

freqs = st.floats(0.2, 4.0)
couplings = st.floats(0.0, 2.5)
phases = st.floats(0.0, 2 * math.pi)
times = st.floats(0.0, 30.0)


def test_boundary_values(detuned_complex):
    s = InitialState(0.1, 0.2, 1.3, 0.7)
    assert greens.u_of(detuned_complex, 0.5, 0.5) == 1
    assert greens.v0_of(detuned_complex, 0.5, 0.5) == 0
    assert greens.v1_of(detuned_complex, s, 0.5, 0.5, 2.0) == 0
    assert greens.v2_of(detuned_complex, s, 0.5, 0.5, 2.0) == 0


def test_resonant_closed_forms(resonant):
    tau = np.linspace(0, 10, 101)
    assert np.allclose(greens.u_of(resonant, 0, tau), np.exp(-1j * tau) * np.cos(tau), atol=1e-14)
    assert np.allclose(greens.v0_of(resonant, 0, tau), -1j * np.exp(-1j * tau) * np.sin(tau), atol=1e-14)


def test_decoupled():
    p = SystemParams(1.7, 0.4, 0.0)
    tau = np.linspace(1, 5, 11)
    assert np.allclose(greens.u_of(p, 1.0, tau), np.exp(-1.7j * (tau - 1)), atol=1e-15)
    assert np.all(greens.v0_of(p, 1.0, tau) == 0)


def test_squeezing_terms_at_quarter_period(resonant):
    s = InitialState(gamma=1.0, theta=0.0)
    t = math.pi / 2
    assert greens.v1_of(resonant, s, 0, t, t) == pytest.approx(math.sinh(1) ** 2, abs=1e-14)
    # v0(pi/2) = -i e^{-i pi/2} sin(pi/2) = -1, so v0^2 = +1
    assert greens.v0_of(resonant, 0, t) == pytest.approx(-1.0, abs=1e-15)
    assert greens.v2_of(resonant, s, 0, t, t) == pytest.approx(math.sinh(2) / 4, abs=1e-14)


def test_coherent_initial_state_has_no_future_terms(detuned_complex):
    s = InitialState(0.5, 0.5, 0.0, 1.0)
    tau = np.linspace(0, 3, 7)
    assert np.all(greens.v1_of(detuned_complex, s, 0, tau, 3) == 0)
    assert np.all(greens.v2_of(detuned_complex, s, 0, tau, 3) == 0)


def test_time_ordering_enforced(resonant):
    s = InitialState(gamma=1.0)
    with pytest.raises(ValueError):
        greens.u_of(resonant, 1.0, 0.5)
    with pytest.raises(ValueError):
        greens.v1_of(resonant, s, 0.0, 2.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(freqs, freqs, couplings, phases, times)
def test_matches_matrix_exponential(w1, w2, g, chi, s):
    p = SystemParams(w1, w2, g * np.exp(1j * chi))
    U = propagator_expm(p, s)
    assert abs(greens.u_of(p, 0.0, s) - U[0, 0]) < 1e-10
    assert abs(greens.v0_of(p, 0.0, s) - U[0, 1]) < 1e-10


@pytest.mark.parametrize("v", [1e-6, 1e-9, 1e-12, 3e-4])
def test_near_resonant_denominator(v):
    # omega_plus -> omega2 as V -> 0 with omega1 < omega2
    p = SystemParams(0.5, 1.0, v)
    for s in (0.3, 5.0, 40.0):
        U = propagator_expm(p, s)
        assert abs(greens.v0_of(p, 0.0, s) - U[0, 1]) < 1e-12
        assert abs(greens.u_of(p, 0.0, s) - U[0, 0]) < 1e-12


@settings(max_examples=40, deadline=None)
@given(freqs, freqs, couplings, phases, times)
def test_unitarity(w1, w2, g, chi, s):
    p = SystemParams(w1, w2, g * np.exp(1j * chi))
    assert abs(abs(greens.u_of(p, 0, s)) ** 2 + abs(greens.v0_of(p, 0, s)) ** 2 - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(freqs, freqs, couplings, phases, st.floats(0, 10), st.floats(0, 10))
def test_group_property(w1, w2, g, chi, s1, s2):
    p = SystemParams(w1, w2, g * np.exp(1j * chi))
    a = greens.single_particle_propagator(p, 0.0, s1)
    b = greens.single_particle_propagator(p, s1, s1 + s2)
    total = greens.single_particle_propagator(p, 0.0, s1 + s2)
    assert np.max(np.abs(b @ a - total)) < 1e-10


@settings(max_examples=40, deadline=None)
@given(freqs, freqs, st.floats(0.05, 2.5), phases, st.floats(0, 20))
def test_transfer_probability_periodic(w1, w2, g, chi, s):
    p = SystemParams(w1, w2, g * np.exp(1j * chi))
    split = math.hypot(w1 - w2, 2 * g)
    w_a = abs(greens.v0_of(p, 0, s)) ** 2
    w_b = abs(greens.v0_of(p, 0, s + 2 * math.pi / split)) ** 2
    assert abs(w_a - w_b) < 1e-10


def test_gamma_scaling(detuned_complex):
    tau, t = 1.1, 2.3
    ref = {g: InitialState(gamma=g, theta=0.4) for g in (0.3, 1.7)}
    r1 = greens.v1_of(detuned_complex, ref[1.7], 0, tau, t) / greens.v1_of(detuned_complex, ref[0.3], 0, tau, t)
    r2 = greens.v2_of(detuned_complex, ref[1.7], 0, tau, t) / greens.v2_of(detuned_complex, ref[0.3], 0, tau, t)
    assert r1 == pytest.approx(math.sinh(1.7) ** 2 / math.sinh(0.3) ** 2, rel=1e-13)
    assert r2 == pytest.approx(math.sinh(3.4) / math.sinh(0.6), rel=1e-13)


def _gauss(a, b, n=80):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


@pytest.mark.parametrize("t0", [0.0, 0.7])
def test_squeezing_terms_match_double_integrals(detuned_complex, t0):
    """v1, v2 against direct 2-D quadrature over the correlation kernels."""
    p = detuned_complex
    s = InitialState(gamma=0.9, theta=1.1)
    kern = greens.CorrelationKernels(p, s, t0)
    tau, t = t0 + 1.3, t0 + 2.1
    x1, w1 = _gauss(t0, tau)
    x2, w2 = _gauss(t0, t)
    u_tau = np.array([propagator_expm(p, tau - a)[0, 0] for a in x1])
    u_t = np.array([propagator_expm(p, t - b)[0, 0] for b in x2])
    T1, T2 = np.meshgrid(x1, x2, indexing="ij")
    weights = np.outer(w1, w2)
    v1 = np.sum(weights * u_tau[:, None] * kern.g_tilde(T1, T2) * np.conj(u_t)[None, :])
    v2 = -np.sum(weights * u_tau[:, None] * kern.g_bar(T1, T2) * u_t[None, :])
    assert abs(greens.v1_of(p, s, t0, tau, t) - v1) < 1e-12
    assert abs(greens.v2_of(p, s, t0, tau, t) - v2) < 1e-12


def test_kernel_properties(detuned_complex):
    k = greens.CorrelationKernels(detuned_complex, InitialState(gamma=0.0))
    assert k.g(1.3, 1.3) == pytest.approx(0.64)
    assert k.g_tilde(1.0, 0.2) == 0
    assert k.g_bar(1.0, 0.2) == 0


@pytest.mark.parametrize(
    "params, n_steps",
    [(SystemParams(2.0, 1.0, 1.0), 1000), (SystemParams(1.0, 1.0, 1.0), 2000), (SystemParams(2.0, 1.0, 0.5), 1000)],
)
def test_residuals_converge_quadratically(params, n_steps):
    coarse, fine = TimeGrid(0, 10, n_steps // 2), TimeGrid(0, 10, n_steps)
    assert greens.residual_u(params, fine) < 1e-3
    assert greens.residual_u(params, coarse) / greens.residual_u(params, fine) > 3.5
    assert greens.residual_v0(params, coarse) / greens.residual_v0(params, fine) > 3.5


def test_residual_decoupled():
    p = SystemParams(1.3, 0.8, 0.0)
    assert greens.residual_v0(p, TimeGrid(0, 5, 100)) == 0
    r1, r2 = greens.residual_u(p, TimeGrid(0, 5, 100)), greens.residual_u(p, TimeGrid(0, 5, 200))
    assert r1 / r2 == pytest.approx(4.0, rel=0.01)


def test_residual_rejects_tiny_grid(resonant):
    with pytest.raises(ValueError):
        greens.residual_u(resonant, TimeGrid(0, 1, 1))


def test_solution_arrays(resonant):
    grid = TimeGrid(0, 2, 40)
    sol = greens.solve_greens(resonant, InitialState(gamma=0.5), grid)
    assert sol.u.shape == (41,)
    assert np.allclose(sol.unitarity, 1, atol=1e-14)
    assert sol.future_influence[0] == 0
    assert sol.max_future_influence > 0
