"""Signal-mode spin states: quadrature densities and exact samplers.

States live in the small-excitation bosonic picture of the collective spin:
the spin-up mode carries the quantum state while the macroscopic spin-down
mode acts as a local oscillator.  Densities follow the vacuum-variance-1/2
convention shared with the kernels module.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ndtri

from . import kernels

_VACUUM_SIGMA = np.sqrt(0.5)

CSS = "css"
DICKE = "dicke"
SQUEEZED_VACUUM = "squeezed"
NUMBER_MIXTURE = "mixture"


@dataclass
class NumberDistribution:
    """Diagonal density-matrix elements rho_MM for M = 0..K."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if rho.ndim != 1 or rho.size == 0:
            raise ValueError("rho must be a non-empty 1-d weight vector")
        if np.any(rho < 0) or not np.all(np.isfinite(rho)):
            raise ValueError("rho entries must be finite and non-negative")
        if abs(rho.sum() - 1.0) > 1e-12:
            raise ValueError(f"rho must sum to 1 within 1e-12, got {rho.sum()!r}")
        self.rho = rho

    @property
    def K(self):
        return self.rho.size - 1


@dataclass(frozen=True)
class SpinStateModel:
    """Which quantum state occupies the signal (spin-up) mode.

    Use the css/dicke/squeezed_vacuum/number_mixture constructors rather
    than instantiating directly.
    """

    kind: str
    m: int = 0
    xi: float = 0.0
    weights: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in (CSS, DICKE, SQUEEZED_VACUUM, NUMBER_MIXTURE):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.kind == DICKE:
            if self.m < 0 or self.m != int(self.m):
                raise ValueError(f"Dicke excitation number must be a non-negative integer, got {self.m}")
        if self.kind == SQUEEZED_VACUUM:
            if not np.isfinite(self.xi) or self.xi < 0:
                raise ValueError(f"squeeze parameter must satisfy xi >= 0, got {self.xi}")
        if self.kind == NUMBER_MIXTURE:
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != 1 or w.size == 0:
                raise ValueError("mixture weights must be a non-empty sequence")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("mixture weights must be finite and non-negative")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError(f"mixture weights must sum to 1 within 1e-12, got {w.sum()!r}")

    @property
    def mixture_weights(self):
        return np.asarray(self.weights, dtype=float)


def css():
    """Coherent spin state: the vacuum of the signal mode."""
    return SpinStateModel(kind=CSS)


def dicke(m):
    """Dicke state with exactly m collective excitations."""
    return SpinStateModel(kind=DICKE, m=int(m))


def squeezed_vacuum(xi):
    """Squeezed vacuum with squeeze parameter xi >= 0."""
    return SpinStateModel(kind=SQUEEZED_VACUUM, xi=float(xi))


def number_mixture(weights):
    """Explicit diagonal mixture of Dicke states."""
    return SpinStateModel(kind=NUMBER_MIXTURE, weights=tuple(float(w) for w in weights))


def squeezed_quad_variance(xi, theta):
    """Variance of the rotated quadrature sin(theta) q + cos(theta) p."""
    return 0.5 * (np.exp(-2.0 * xi) * np.sin(theta) ** 2
                  + np.exp(2.0 * xi) * np.cos(theta) ** 2)


def quad_density(state, theta, q):
    """Density of the rotated quadrature sin(theta) q + cos(theta) p in the state.

    Fock-diagonal variants (CSS, Dicke, mixtures) are theta-independent;
    the squeezed vacuum is a zero-mean Gaussian whose variance rotates
    with theta.
    """
    theta = np.asarray(theta, dtype=float)
    qarr = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(theta)) or not np.all(np.isfinite(qarr)):
        raise ValueError("theta and q must be finite")
    scalar = np.isscalar(q) or np.ndim(q) == 0
    if state.kind == CSS:
        dens = np.exp(-qarr * qarr) / np.sqrt(np.pi)
    elif state.kind == DICKE:
        dens = kernels.fock_quad_density(state.m, qarr)
        dens = np.asarray(dens)
    elif state.kind == SQUEEZED_VACUUM:
        var = squeezed_quad_variance(state.xi, theta)
        dens = np.exp(-qarr * qarr / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)
    else:
        w = state.mixture_weights
        table = kernels.hermite_function_table(w.size - 1, qarr)
        dens = w @ (table * table)
    return float(dens) if scalar and dens.ndim == 0 else (float(dens[0]) if scalar else dens)


def number_distribution(state, K):
    """Exact rho_MM of the state truncated at cutoff K.

    Returns (weights, tail_mass): weights has length K+1 and is not
    renormalized; tail_mass is the probability beyond the cutoff so callers
    can assert it is small instead of silently absorbing it.
    """
    if K < 0 or K != int(K):
        raise ValueError(f"cutoff K must be a non-negative integer, got {K}")
    K = int(K)
    rho = np.zeros(K + 1)
    if state.kind == CSS:
        rho[0] = 1.0
        return rho, 0.0
    if state.kind == DICKE:
        if state.m > K:
            raise ValueError(f"cutoff K={K} too small for Dicke state with M={state.m}")
        rho[state.m] = 1.0
        return rho, 0.0
    if state.kind == SQUEEZED_VACUUM:
        full = squeezed_number_weights(state.xi, K)
        return full, max(0.0, 1.0 - full.sum())
    w = state.mixture_weights
    n = min(w.size, K + 1)
    rho[:n] = w[:n]
    return rho, max(0.0, float(w[K + 1:].sum()))


def squeezed_number_weights(xi, K):
    """Closed-form rho_{2m,2m} = [(2m)!/(2^{2m}(m!)^2)] tanh^{2m}(xi)/cosh(xi)."""
    rho = np.zeros(K + 1)
    rho[0] = 1.0 / np.cosh(xi)
    t2 = np.tanh(xi) ** 2
    for m in range(0, K - 1, 2):
        # ratio of consecutive even terms keeps the factorials implicit
        rho[m + 2] = rho[m] * t2 * (m + 1) / (m + 2.0)
    return rho


@lru_cache(maxsize=256)
def _dicke_ppf_table(m):
    """Tabulated inverse CDF of the Fock-m quadrature density.

    Uniform 4096-point grid over +-(2 sqrt(2m+1) + 4) with trapezoid CDF;
    robust for every m the package supports without rejection tuning.
    """
    half_width = 2.0 * np.sqrt(2.0 * m + 1.0) + 4.0
    grid = np.linspace(-half_width, half_width, 4096)
    dens = kernels.fock_quad_density(m, grid)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))))
    cdf /= cdf[-1]
    return grid, cdf


def _dicke_ppf(m, u):
    grid, cdf = _dicke_ppf_table(m)
    return np.interp(u, cdf, grid)


def quadrature_from_uniform(state, theta, u):
    """Map uniform variates to exact quadrature samples at phase theta.

    u has shape (n, 2); Gaussian variants invert the normal CDF on the
    first column, Dicke states use the tabulated inverse CDF, and mixtures
    spend the first column on component selection and the second on the
    component's quantile.  Fixed draw consumption keeps the simulator's
    per-shot randomness contract exact.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (u.shape[0],))
    if state.kind == CSS:
        return ndtri(u[:, 0]) * _VACUUM_SIGMA
    if state.kind == SQUEEZED_VACUUM:
        sigma = np.sqrt(squeezed_quad_variance(state.xi, theta))
        return ndtri(u[:, 0]) * sigma
    if state.kind == DICKE:
        return _dicke_ppf(state.m, u[:, 0])
    w = state.mixture_weights
    comp = np.searchsorted(np.cumsum(w), u[:, 0], side="right")
    comp = np.minimum(comp, w.size - 1)
    out = np.empty(u.shape[0])
    for m in np.unique(comp):
        mask = comp == m
        out[mask] = _dicke_ppf(int(m), u[mask, 1])
    return out


def sample_quadrature(state, theta, rng, size=None):
    """Draw from quad_density(state, theta, .) using the given generator.

    size=None returns a scalar; otherwise an array of the requested length.
    """
    n = 1 if size is None else int(size)
    q = quadrature_from_uniform(state, theta, rng.random((n, 2)))
    return float(q[0]) if size is None else q
