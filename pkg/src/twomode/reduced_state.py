"""Analytical reduced density matrix of mode 1.

rho1(t) = N~ exp(A^dag) [sum_n delta^n |n><n|] exp(A),
A^dag = [(1 - delta) alpha + beta alpha*] a^dag - beta/2 a^dag^2.

exp(A^dag) only raises photon number, so the block on |0>..|n_max> of every
factor, and hence of rho1, is exact; only the trace normalisation sees the
truncation.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import greens
from .model import InitialState, SystemParams, TruncationError

TAIL_TOL = 1e-10
DEFAULT_N_MAX = 40


@dataclass(frozen=True)
class FockMatrix:
    """Dense density matrix on the number states |0>..|n_max>."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_max(self) -> int:
        return self.data.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.data).real)

    @property
    def purity(self) -> float:
        # Tr(rho^2) for Hermitian rho is the squared Frobenius norm
        return float(np.sum(np.abs(self.data) ** 2))

    def eigenvalues(self) -> np.ndarray:
        """Descending eigenvalues of the Hermitian part."""
        h = 0.5 * (self.data + self.data.conj().T)
        return np.linalg.eigvalsh(h)[::-1]

    def normalized(self) -> "FockMatrix":
        return FockMatrix(self.data / self.trace)

    def truncated(self, n_max: int) -> "FockMatrix":
        """Top-left block on |0>..|n_max>, renormalised to unit trace."""
        if n_max > self.n_max:
            raise ValueError(f"cannot truncate n_max={self.n_max} matrix to {n_max}")
        return FockMatrix(self.data[: n_max + 1, : n_max + 1]).normalized()

    def expectation_a(self) -> complex:
        """<a> = Tr(rho a)."""
        n = np.arange(1, self.n_max + 1)
        return complex(np.sum(np.sqrt(n) * np.diagonal(self.data, offset=-1)))

    def check(self, herm_tol: float = 1e-12, trace_tol: float = 1e-12, pos_tol: float = 1e-10) -> None:
        """Raise ValueError unless Hermitian, unit trace and positive semidefinite."""
        if np.max(np.abs(self.data - self.data.conj().T), initial=0.0) > herm_tol:
            raise ValueError("matrix is not Hermitian")
        if abs(self.trace - 1.0) > trace_tol:
            raise ValueError(f"trace {self.trace} differs from 1")
        lowest = self.eigenvalues()[-1]
        if lowest < -pos_tol:
            raise ValueError(f"negative eigenvalue {lowest}")


@dataclass(frozen=True)
class ReducedStateCoefficients:
    """alpha(t), beta(t), delta(t) of rho1(t); w = |v0(t, t0)|^2."""

    alpha_t: complex
    beta_t: complex
    delta_t: float
    w: float
    gamma: float

    @property
    def normalization(self) -> float:
        """N~(t), the prefactor that gives exp(A^dag) delta^n exp(A) unit trace."""
        a, b, d = self.alpha_t, self.beta_t, self.delta_t
        t2 = math.tanh(self.gamma) ** 2
        denom = 1.0 - (1.0 - self.w) ** 2 * t2
        n_t = math.exp(-abs(a) ** 2) / (math.cosh(self.gamma) * math.sqrt(denom))
        corr = d * abs(a) ** 2 - 0.5 * (b.conjugate() * a * a + b * (a * a).conjugate()).real
        return n_t * math.exp(corr)

    @property
    def creation_coefficient(self) -> complex:
        """Coefficient of a^dag in A^dag(t)."""
        return (1.0 - self.delta_t) * self.alpha_t + self.beta_t * self.alpha_t.conjugate()

    @property
    def thermal_ratio(self) -> float:
        """Ratio of successive eigenvalues of rho1: nbar / (nbar + 1).

        nbar(nbar + 1) = w (1 - w) sinh^2(gamma) is the determinant of the
        normally ordered fluctuation moments of mode 1.
        """
        x = self.w * (1.0 - self.w) * math.sinh(self.gamma) ** 2
        nbar = 2.0 * x / (1.0 + math.sqrt(1.0 + 4.0 * x))
        return nbar / (nbar + 1.0)


def coefficients(params: SystemParams, state: InitialState, t0: float, t: float) -> ReducedStateCoefficients:
    """alpha, beta, delta of rho1(t).

    beta and delta are written through the end-point Green functions,
    v1(t, t) = sinh^2(g) w and v2(t, t) = sinh(2g) e^{i theta} v0^2 / 4:

        beta  = 2 sech^2(g) v2(t, t) / D,   delta = sech^2(g) (1 - w) v1(t, t) / D,
        D = 1 - (1 - w)^2 tanh^2(g).

    1 - w is taken as |u|^2 (equal by unitarity) to keep it accurate near w = 1.
    """
    if t < t0:
        raise ValueError("t must not precede t0")
    u = greens.u_of(params, t0, t)
    v0 = greens.v0_of(params, t0, t)
    alpha_t = u * state.alpha1 + v0 * state.alpha2
    w = abs(v0) ** 2
    one_minus_w = abs(u) ** 2
    if state.gamma == 0:
        return ReducedStateCoefficients(complex(alpha_t), 0j, 0.0, float(w), 0.0)
    sech2 = 1.0 / math.cosh(state.gamma) ** 2
    denom = 1.0 - one_minus_w ** 2 * math.tanh(state.gamma) ** 2
    v1 = greens.v1_of(params, state, t0, t, t)
    v2 = greens.v2_of(params, state, t0, t, t)
    delta = sech2 * one_minus_w * v1 / denom
    if abs(delta.imag) > 1e-12:
        raise ArithmeticError(f"delta acquired an imaginary part {delta.imag}")
    beta = 2.0 * sech2 * v2 / denom
    return ReducedStateCoefficients(complex(alpha_t), complex(beta), float(delta.real), float(w), state.gamma)


def _power_series_matrix(coef: complex, step: int, n_max: int) -> np.ndarray:
    """Matrix of exp(coef * a^dag^step) on |0>..|n_max>.

    <m| exp(c a^dag^p) |n> = c^k / k! * sqrt(m! / n!) for m = n + p k, else 0;
    built in log space so large n_max cannot overflow.
    """
    dim = n_max + 1
    out = np.eye(dim, dtype=complex)
    if coef == 0:
        return out
    log_fact = gammaln(np.arange(dim) + 1.0)
    m, n = np.indices((dim, dim))
    k, rem = np.divmod(m - n, step)
    mask = (m > n) & (rem == 0)
    kk, mm, nn = k[mask], m[mask], n[mask]
    logmag = kk * math.log(abs(coef)) - gammaln(kk + 1.0) + 0.5 * (log_fact[mm] - log_fact[nn])
    out[mask] = np.exp(logmag + 1j * cmath.phase(coef) * kk)
    return out


def creation_exponential(coeffs: ReducedStateCoefficients, n_max: int) -> np.ndarray:
    """exp(A^dag) on |0>..|n_max>, exact: the a^dag and a^dag^2 parts commute and factorise."""
    linear = _power_series_matrix(coeffs.creation_coefficient, 1, n_max)
    pair = _power_series_matrix(-0.5 * coeffs.beta_t, 2, n_max)
    return linear @ pair


def unnormalized_rho1(coeffs: ReducedStateCoefficients, n_max: int) -> np.ndarray:
    """exp(A^dag) diag(delta^n) exp(A) on |0>..|n_max>, without any prefactor."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    e = creation_exponential(coeffs, n_max)
    thermal = coeffs.delta_t ** np.arange(n_max + 1, dtype=float)
    return (e * thermal) @ e.conj().T


def fock_from_coefficients(
    coeffs: ReducedStateCoefficients, n_max: int = DEFAULT_N_MAX, tail_tol: float | None = TAIL_TOL
) -> FockMatrix:
    """Unit-trace rho1 on |0>..|n_max>.

    With ``tail_tol`` set, raises TruncationError when the top diagonal element
    exceeds ``tail_tol`` times the trace, i.e. when the matrix no longer
    represents the whole state. Pass None to get the normalised block regardless.
    """
    raw = unnormalized_rho1(coeffs, n_max)
    raw = 0.5 * (raw + raw.conj().T)
    tr = np.trace(raw).real
    if tail_tol is not None and raw[-1, -1].real > tail_tol * tr:
        raise TruncationError(
            f"occupation of |{n_max}> is {raw[-1, -1].real / tr:.3g} of the trace; increase n_max"
        )
    return FockMatrix(raw / tr)


def rho1_fock(
    params: SystemParams,
    state: InitialState,
    t0: float,
    t: float,
    n_max: int = DEFAULT_N_MAX,
    tail_tol: float | None = TAIL_TOL,
) -> FockMatrix:
    return fock_from_coefficients(coefficients(params, state, t0, t), n_max, tail_tol)


def rho1_purity_analytical(
    coeffs: ReducedStateCoefficients, n_max: int = DEFAULT_N_MAX, tail_tol: float | None = TAIL_TOL
) -> float:
    """Tr(rho1^2) of the analytical state; raises TruncationError if n_max is too small."""
    return fock_from_coefficients(coeffs, n_max, tail_tol).purity


def coherent_kernel(coeffs: ReducedStateCoefficients, z, zp):
    """<z| rho1 |z'> in unnormalised coherent states |z> = exp(z a^dag)|0>."""
    a, b, d = coeffs.alpha_t, coeffs.beta_t, coeffs.delta_t
    z = np.asarray(z, dtype=complex)
    zp = np.asarray(zp, dtype=complex)
    denom = 1.0 - (1.0 - coeffs.w) ** 2 * math.tanh(coeffs.gamma) ** 2
    n_t = math.exp(-abs(a) ** 2) / (math.cosh(coeffs.gamma) * math.sqrt(denom))
    zc = np.conj(z)
    expo = (
        zc * a
        - 0.5 * b * (zc - a.conjugate()) ** 2
        + d * (zc - a.conjugate()) * (zp - a)
        + a.conjugate() * zp
        - 0.5 * b.conjugate() * (zp - a) ** 2
    )
    return n_t * np.exp(expo)
