"""Brute-force two-mode evolution in a truncated Fock space.

Two-mode vectors use mode-1-major ordering: amplitude of |m1, m2> sits at
index m1 * (n_max + 1) + m2, i.e. ``psi.reshape(n_max + 1, n_max + 1)[m1, m2]``.

Two propagators are provided. :class:`DensePropagator` diagonalises the full
(n_max + 1)^2 Hamiltonian matrix. :class:`SectorPropagator` uses the fact that
the beam-splitter Hamiltonian conserves m1 + m2 and diagonalises each
fixed-number block separately; on states with at most ``cutoff`` photons in
total it is exact, which lets the oracle reach the large cutoffs that squeezed
inputs need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import expm_multiply

from .model import InitialState, SystemParams, TruncationError
from .reduced_state import FockMatrix

TRUNCATION_BUDGET = 1e-10
MAX_CUTOFF = 300


def lowering(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)


@dataclass(frozen=True)
class TwoModeOperators:
    n_max: int
    a1: np.ndarray
    a1_dag: np.ndarray
    a2: np.ndarray
    a2_dag: np.ndarray
    n1: np.ndarray
    n2: np.ndarray

    @classmethod
    def build(cls, n_max: int) -> "TwoModeOperators":
        if n_max < 1:
            raise ValueError("n_max must be at least 1")
        a = lowering(n_max)
        eye = np.eye(n_max + 1, dtype=complex)
        a1 = np.kron(a, eye)
        a2 = np.kron(eye, a)
        return cls(
            n_max=n_max,
            a1=a1,
            a1_dag=a1.conj().T,
            a2=a2,
            a2_dag=a2.conj().T,
            n1=a1.conj().T @ a1,
            n2=a2.conj().T @ a2,
        )


@dataclass(frozen=True)
class TwoModeState:
    n_max: int
    amplitudes: np.ndarray
    truncation_budget: float = TRUNCATION_BUDGET

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != ((self.n_max + 1) ** 2,):
            raise ValueError(f"expected {(self.n_max + 1) ** 2} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)
        norm2 = self.norm ** 2
        if norm2 > 1 + 1e-12 or norm2 < 1 - self.truncation_budget:
            raise TruncationError(
                f"state norm^2 {norm2:.15g} outside [1 - {self.truncation_budget:g}, 1]; increase n_max"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_matrix(self) -> np.ndarray:
        return self.amplitudes.reshape(self.n_max + 1, self.n_max + 1)


def build_hamiltonian(params: SystemParams, n_max: int) -> np.ndarray:
    """w1 a1^dag a1 + w2 a2^dag a2 + V12 a1^dag a2 + V12* a2^dag a1 as a dense matrix."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    a = lowering(n_max)
    eye = np.eye(n_max + 1, dtype=complex)
    a1 = np.kron(a, eye)
    a2 = np.kron(eye, a)
    num = np.arange(n_max + 1, dtype=float)
    diag = params.omega1 * np.repeat(num, n_max + 1) + params.omega2 * np.tile(num, n_max + 1)
    hop = params.v12 * (a1.conj().T @ a2)
    return np.diag(diag).astype(complex) + hop + hop.conj().T


def _check_deficit(vec: np.ndarray, budget: float | None) -> np.ndarray:
    deficit = 1.0 - float(np.vdot(vec, vec).real)
    if budget is not None and deficit > budget:
        raise TruncationError(
            f"truncated vector misses norm^2 {deficit:.3g} > budget {budget:g}; increase n_max"
        )
    return vec


def coherent_vector(alpha: complex, n_max: int, budget: float | None = TRUNCATION_BUDGET) -> np.ndarray:
    """Amplitudes e^{-|a|^2/2} a^m / sqrt(m!) for m = 0..n_max."""
    amps = np.empty(n_max + 1, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for m in range(1, n_max + 1):
        amps[m] = amps[m - 1] * alpha / math.sqrt(m)
    return _check_deficit(amps, budget)


def squeezed_coherent_vector(
    alpha: complex,
    gamma: float,
    theta: float,
    n_max: int,
    budget: float | None = TRUNCATION_BUDGET,
    pad: int | None = None,
) -> np.ndarray:
    """D(alpha) S(gamma e^{i theta}) |0> on |0>..|n_max>.

    Both exponentials act in a padded space of n_max + 1 + pad levels and the
    result is cut back to n_max, so the lost norm measures the truncation
    (a unitary in the unpadded space would hide it).
    """
    if pad is None:
        pad = max(40, n_max // 2 + 20)
    dim = n_max + 1 + pad
    a = sparse.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, format="csc").astype(complex)
    ad = a.T.tocsc()
    vec = np.zeros(dim, dtype=complex)
    vec[0] = 1.0
    if gamma:
        s = gamma * complex(math.cos(theta), math.sin(theta))
        vec = expm_multiply(0.5 * (s.conjugate() * (a @ a) - s * (ad @ ad)), vec)
    if alpha:
        vec = expm_multiply(alpha * ad - np.conj(alpha) * a, vec)
    return _check_deficit(vec[: n_max + 1], budget)


def product_state(
    phi1: np.ndarray, phi2: np.ndarray, total_cutoff: int | None = None, budget: float = TRUNCATION_BUDGET
) -> TwoModeState:
    """phi1 (x) phi2, optionally dropping components with m1 + m2 > total_cutoff."""
    if len(phi1) != len(phi2):
        raise ValueError("mode vectors must share n_max")
    n_max = len(phi1) - 1
    psi = np.outer(phi1, phi2)
    if total_cutoff is not None:
        m = np.arange(n_max + 1)
        psi = np.where(m[:, None] + m[None, :] <= total_cutoff, psi, 0.0)
    return TwoModeState(n_max, psi.ravel(), budget)


def initial_state(state: InitialState, n_max: int, budget: float = TRUNCATION_BUDGET) -> TwoModeState:
    """|alpha1> (x) D(alpha2) S(s)|0> with each mode cut at n_max."""
    phi1 = coherent_vector(state.alpha1, n_max, budget)
    phi2 = squeezed_coherent_vector(state.alpha2, state.gamma, state.theta, n_max, budget)
    return product_state(phi1, phi2, budget=budget)


class DensePropagator:
    """exp(-i H dt) from one eigendecomposition of a dense Hermitian H."""

    def __init__(self, hamiltonian: np.ndarray):
        h = np.asarray(hamiltonian, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("Hamiltonian must be square")
        if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-12 * max(1.0, np.abs(h).max()):
            raise ValueError("Hamiltonian is not Hermitian")
        self.energies, self.vectors = np.linalg.eigh(h)

    def evolve(self, psi0: np.ndarray, dt: float) -> np.ndarray:
        coeffs = self.vectors.conj().T @ np.asarray(psi0, dtype=complex)
        return self.vectors @ (np.exp(-1j * self.energies * dt) * coeffs)


def evolve(hamiltonian: np.ndarray, psi0: np.ndarray, dt: float) -> np.ndarray:
    """One-shot exp(-i H dt) psi0; build a DensePropagator to reuse the eigenbasis."""
    return DensePropagator(hamiltonian).evolve(psi0, dt)


class SectorPropagator:
    """Exact evolution of states with m1 + m2 <= cutoff, one block per photon number.

    The N-photon block is tridiagonal in |m1, N - m1>. A gauge phase
    e^{i arg(V12) m1} makes it real, so each block is diagonalised with
    ``eigh_tridiagonal``. Vectors use the (cutoff + 1)^2 mode-1-major layout.
    """

    def __init__(self, params: SystemParams, cutoff: int):
        self.params = params
        self.cutoff = cutoff
        dim = cutoff + 1
        g = params.coupling_strength
        chi = np.angle(params.v12)
        self._blocks = []
        for n in range(dim):
            m1 = np.arange(n + 1)
            idx = m1 * dim + (n - m1)
            diag = params.omega1 * m1 + params.omega2 * (n - m1)
            if n == 0:
                energies, vecs = diag.astype(float), np.ones((1, 1))
            else:
                off = g * np.sqrt((m1[:-1] + 1.0) * (n - m1[:-1]))
                energies, vecs = eigh_tridiagonal(diag.astype(float), off)
            vecs = np.exp(1j * chi * m1)[:, None] * vecs
            self._blocks.append((idx, energies, vecs))

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** 2

    def evolve(self, psi0: np.ndarray, dt: float) -> np.ndarray:
        psi0 = np.asarray(psi0, dtype=complex)
        if psi0.shape != (self.dim,):
            raise ValueError(f"expected a vector of length {self.dim}")
        out = np.zeros_like(psi0)
        for idx, energies, vecs in self._blocks:
            c = vecs.conj().T @ psi0[idx]
            out[idx] = vecs @ (np.exp(-1j * energies * dt) * c)
        return out


def partial_trace_mode2(psi: np.ndarray, n_max: int) -> FockMatrix:
    """rho1[m, m'] = sum_k psi[m, k] conj(psi[m', k]); trace equals ||psi||^2."""
    mat = np.asarray(psi, dtype=complex).reshape(n_max + 1, n_max + 1)
    return FockMatrix(mat @ mat.conj().T)


def partial_trace_mode1(psi: np.ndarray, n_max: int) -> FockMatrix:
    mat = np.asarray(psi, dtype=complex).reshape(n_max + 1, n_max + 1)
    return FockMatrix(mat.T @ mat.conj())


def required_cutoff(state: InitialState, budget: float = TRUNCATION_BUDGET, max_cutoff: int = MAX_CUTOFF) -> int:
    """Smallest total photon number K with P(m1 + m2 > K) <= budget for the initial state."""
    p1 = np.abs(coherent_vector(state.alpha1, max_cutoff, budget=None)) ** 2
    p2 = np.abs(squeezed_coherent_vector(state.alpha2, state.gamma, state.theta, max_cutoff, budget=None)) ** 2
    kept = np.cumsum(np.convolve(p1, p2)[: max_cutoff + 1])
    ok = np.nonzero(1.0 - kept <= budget)[0]
    if ok.size == 0:
        raise TruncationError(
            f"initial state needs more than {max_cutoff} photons to stay within budget {budget:g}; "
            "increase n_max / max_cutoff or reduce gamma"
        )
    return int(ok[0])


@dataclass(frozen=True)
class OracleSeries:
    """Mode-1 reduced states on a list of times, from the full two-mode evolution."""

    times: np.ndarray
    cutoff: int
    initial_norm: float
    rho1: tuple
    rho2_purity: np.ndarray | None


def oracle_reduced_states(
    params: SystemParams,
    state: InitialState,
    t0: float,
    times,
    budget: float = TRUNCATION_BUDGET,
    max_cutoff: int = MAX_CUTOFF,
    min_cutoff: int = 1,
    mode2_purity: bool = False,
) -> OracleSeries:
    """Evolve |psi(t0)> exactly and trace out mode 2 at each time.

    The working cutoff is the larger of ``min_cutoff`` and the smallest total
    photon number that keeps the discarded initial weight within ``budget``.
    Returned rho1 matrices are unnormalised (trace = kept norm^2). Mode-2
    purities are only computed on request (they double the cost).
    """
    cutoff = max(min_cutoff, required_cutoff(state, budget, max_cutoff))
    phi1 = coherent_vector(state.alpha1, cutoff, budget=None)
    phi2 = squeezed_coherent_vector(state.alpha2, state.gamma, state.theta, cutoff, budget=None)
    psi0 = product_state(phi1, phi2, total_cutoff=cutoff, budget=budget)
    prop = SectorPropagator(params, cutoff)
    times = np.asarray(times, dtype=float)
    rhos = []
    purity2 = []
    for t in times:
        psi = prop.evolve(psi0.amplitudes, t - t0)
        rhos.append(partial_trace_mode2(psi, cutoff))
        if mode2_purity:
            purity2.append(partial_trace_mode1(psi, cutoff).normalized().purity)
    return OracleSeries(
        times, cutoff, psi0.norm, tuple(rhos), np.asarray(purity2) if mode2_purity else None
    )
