"""Hermite polynomials, Fock quadrature densities, and loss-smeared kernels.

The central object is the phase-averaged kernel of an M-excitation Dicke
state seen through detection efficiency eta: a binomial mixture of Fock
quadrature densities.  Everything uses the vacuum-variance-1/2 convention,
i.e. the vacuum density is exp(-q^2)/sqrt(pi).
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

MAX_HERMITE_DEGREE = 512
MAX_FOCK_INDEX = 256

_SQRT_PI = np.sqrt(np.pi)


def hermite(m, q):
    """Physicists' Hermite polynomial H_m(q) by the three-term recurrence.

    Raw H_m overflows double precision near m ~ 90 for moderate q; use
    fock_quad_density for anything that needs normalized magnitudes.
    """
    if m < 0 or m != int(m):
        raise ValueError(f"Hermite degree must be a non-negative integer, got {m}")
    if m > MAX_HERMITE_DEGREE:
        raise ValueError(f"Hermite degree {m} exceeds overflow guard {MAX_HERMITE_DEGREE}")
    q = np.asarray(q, dtype=float)
    h_prev = np.ones_like(q)
    if m == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * q
    for k in range(1, int(m)):
        h_prev, h = h, 2.0 * q * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def hermite_function_table(mmax, q):
    """Normalized Hermite functions h_0..h_mmax at points q, shape (mmax+1, n).

    h_m(q) = H_m(q) exp(-q^2/2) / sqrt(2^m m! sqrt(pi)) stays O(1) for all m,
    so the recurrence is overflow-free where raw H_m and m! are not.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    table = np.zeros((mmax + 1, q.size))
    table[0] = np.pi ** -0.25 * np.exp(-0.5 * q * q)
    if mmax >= 1:
        table[1] = np.sqrt(2.0) * q * table[0]
    for m in range(1, mmax):
        table[m + 1] = q * np.sqrt(2.0 / (m + 1)) * table[m] \
            - np.sqrt(m / (m + 1.0)) * table[m - 1]
    return table


def fock_quad_density(m, q):
    """Quadrature density |<q|m>|^2 of the m-th Fock state.

    Equals H_m(q)^2 exp(-q^2) / (sqrt(pi) 2^m m!), evaluated through the
    normalized-function recurrence.
    """
    if m < 0 or m != int(m):
        raise ValueError(f"Fock index must be a non-negative integer, got {m}")
    if m > MAX_FOCK_INDEX:
        raise ValueError(f"Fock index {m} exceeds guard {MAX_FOCK_INDEX}")
    scalar = np.isscalar(q) or np.ndim(q) == 0
    h = hermite_function_table(int(m), q)[int(m)]
    dens = h * h
    return float(dens[0]) if scalar else dens


def binomial_loss_weights(K, eta):
    """Lower-triangular matrix W[M, m] = C(M, m) eta^m (1-eta)^(M-m), m <= M."""
    _check_eta(eta)
    if K < 0 or K > MAX_FOCK_INDEX:
        raise ValueError(f"cutoff K={K} outside [0, {MAX_FOCK_INDEX}]")
    W = np.zeros((K + 1, K + 1))
    for M in range(K + 1):
        W[M, : M + 1] = binom.pmf(np.arange(M + 1), M, eta)
    return W


def kernel_A(M, eta, Q):
    """Phase-averaged loss-smeared kernel of the M-excitation state.

    A_M(Q) = sum_m C(M,m) eta^m (1-eta)^(M-m) * fock_quad_density(m, Q).
    """
    _check_eta(eta)
    if M < 0 or M > MAX_FOCK_INDEX:
        raise ValueError(f"M={M} outside [0, {MAX_FOCK_INDEX}]")
    M = int(M)
    scalar = np.isscalar(Q) or np.ndim(Q) == 0
    table = hermite_function_table(M, Q)
    weights = binom.pmf(np.arange(M + 1), M, eta)
    dens = weights @ (table * table)
    return float(dens[0]) if scalar else dens


@dataclass(frozen=True)
class KernelMatrix:
    """Bin-integrated kernels over a histogram grid.

    entries[nu, M] integrates A_M over bin nu; column_mass[M] is the total
    in-range mass and tail_mass[M] the remainder outside the grid.
    """

    entries: np.ndarray
    eta: float
    k_max: int
    bin_edges: np.ndarray
    rule: str

    @property
    def column_mass(self):
        return self.entries.sum(axis=0)

    @property
    def tail_mass(self):
        return np.clip(1.0 - self.column_mass, 0.0, None)

    def truncated(self, K):
        """View of the matrix restricted to components 0..K."""
        if K > self.k_max:
            raise ValueError(f"K={K} exceeds built cutoff {self.k_max}")
        return KernelMatrix(self.entries[:, : K + 1], self.eta, K,
                            self.bin_edges, self.rule)


def build_kernel_matrix(K, eta, bin_edges, rule="gauss16"):
    """Integrate A_0..A_K over each histogram bin.

    rule "gauss16" uses 16-node Gauss-Legendre per bin; "midpoint" is the
    coarser A_M(Q_nu)*deltaQ compatibility mode.
    """
    _check_eta(eta)
    if K < 0 or K > MAX_FOCK_INDEX:
        raise ValueError(f"cutoff K={K} outside [0, {MAX_FOCK_INDEX}]")
    bin_edges = np.asarray(bin_edges, dtype=float)
    if bin_edges.ndim != 1 or bin_edges.size < 2:
        raise ValueError("bin_edges must be a 1-d array with at least 1 bin")
    widths = np.diff(bin_edges)
    if np.any(widths <= 0):
        raise ValueError("bin_edges must be strictly increasing")

    W = binomial_loss_weights(K, eta)
    if rule == "midpoint":
        centers = 0.5 * (bin_edges[:-1] + bin_edges[1:])
        table = hermite_function_table(K, centers)
        A_pts = W @ (table * table)
        entries = (A_pts * widths[None, :]).T
    elif rule == "gauss16":
        nodes, weights = np.polynomial.legendre.leggauss(16)
        mid = 0.5 * (bin_edges[:-1] + bin_edges[1:])
        half = 0.5 * widths
        pts = mid[:, None] + half[:, None] * nodes[None, :]
        wts = half[:, None] * weights[None, :]
        table = hermite_function_table(K, pts.ravel())
        A_pts = (W @ (table * table)).reshape(K + 1, *pts.shape)
        entries = (A_pts * wts[None]).sum(axis=2).T
    else:
        raise ValueError(f"unknown integration rule {rule!r}")
    return KernelMatrix(entries, float(eta), int(K), bin_edges, rule)


def phase_averaged_density(rho, eta, Q):
    """Mixture density sum_M rho[M] * A_M(eta, Q).

    rho may be a plain weight array or anything with a .rho attribute;
    it is assumed normalized.
    """
    weights = np.asarray(getattr(rho, "rho", rho), dtype=float)
    _check_eta(eta)
    K = weights.size - 1
    if K > MAX_FOCK_INDEX:
        raise ValueError(f"mixture cutoff {K} exceeds guard {MAX_FOCK_INDEX}")
    scalar = np.isscalar(Q) or np.ndim(Q) == 0
    table = hermite_function_table(K, Q)
    W = binomial_loss_weights(K, eta)
    dens = (weights @ W) @ (table * table)
    return float(dens[0]) if scalar else dens


def _check_eta(eta):
    if not (0.0 < eta <= 1.0) or not np.isfinite(eta):
        raise ValueError(f"efficiency eta must lie in (0, 1], got {eta}")
