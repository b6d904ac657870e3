"""Finite-N spin-projection picture behind the bosonic approximation.

For N spin-1/2 atoms, the distribution of the collective projection J_z in
the Dicke state with M excitations along x is the squared Wigner d-column
at angle pi/2.  Folded by sqrt(N/2), it converges to the M-th Fock
quadrature density; these routines provide that finite-N oracle.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import kernels

MAX_ATOMS = 4096


@dataclass
class SpinProjection:
    """P_z(m) for m = -N/2 .. N/2 in the M-excitation Dicke state."""

    N: int
    M: int
    m_values: np.ndarray
    probs: np.ndarray

    def as_dict(self):
        return {float(m): float(p) for m, p in zip(self.m_values, self.probs)}


def _check_args(N, M):
    if N < 1 or N != int(N):
        raise ValueError(f"atom number N must be a positive integer, got {N}")
    if N > MAX_ATOMS:
        raise ValueError(f"N={N} exceeds the double-precision guard {MAX_ATOMS}")
    if M < 0 or M > N or M != int(M):
        raise ValueError(f"excitation number M must lie in 0..N, got {M}")


def wigner_d_column(N, M):
    """Wigner d^{N/2}_{m, -N/2+M}(pi/2) for m = -N/2..N/2 (index N/2+m).

    The lowest-weight column (M=0) is the closed-form signed binomial
    amplitude, computed in log space; higher columns follow by applying the
    rotated raising operator, a tridiagonal recurrence in m.  Entries whose
    true magnitude is below the double-precision floor underflow to zero.
    """
    _check_args(N, M)
    N, M = int(N), int(M)
    i = np.arange(N + 1)
    j = N / 2.0
    m = i - j
    log_mag = 0.5 * (gammaln(N + 1) - gammaln(i + 1) - gammaln(N - i + 1)) \
        - 0.5 * N * np.log(2.0)
    with np.errstate(under="ignore"):
        v = np.where(i % 2 == 0, 1.0, -1.0) * np.exp(log_mag)
    # couplings a_m between m and m+1 from J+-
    a = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    for step in range(M):
        mp = -j + step
        w = np.empty_like(v)
        # (iJ_y - J_z) v, the image of the raising operator under the
        # pi/2 rotation, normalized by the usual ladder coefficient
        w[0] = -0.5 * a[0] * v[1] - m[0] * v[0]
        w[-1] = 0.5 * a[-1] * v[-2] - m[-1] * v[-1]
        w[1:-1] = 0.5 * (a[:-1] * v[:-2] - a[1:] * v[2:]) - m[1:-1] * v[1:-1]
        v = w / np.sqrt(j * (j + 1) - mp * (mp + 1))
    return v


def wigner_d_matrix_bruteforce(N):
    """Full d^{N/2}(pi/2) via the dense matrix exponential of -i (pi/2) J_y.

    Independent oracle for wigner_d_column: column M of the returned matrix
    is the amplitude vector of the M-excitation Dicke state along x in the
    J_z basis.  Intended for small N.
    """
    from scipy.linalg import expm

    _check_args(N, 0)
    j = N / 2.0
    m = np.arange(N + 1) - j
    a = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    j_plus = np.zeros((N + 1, N + 1))
    j_plus[np.arange(1, N + 1), np.arange(N)] = a
    minus_i_jy = -0.5 * (j_plus - j_plus.T)
    return expm((np.pi / 2.0) * minus_i_jy)


def pz_distribution(N, M):
    """Probability of measuring J_z = m in the M-excitation Dicke state."""
    v = wigner_d_column(N, M)
    m_values = np.arange(N + 1) - N / 2.0
    return SpinProjection(int(N), int(M), m_values, v * v)


def gaussian_limit(N, M, m):
    """Large-N de Moivre-Laplace limit of P_z(m), for M = 0 or 1.

    M=0: exp(-m^2/(N/2)) / sqrt(pi N/2).
    M=1: the same Gaussian times 2 m^2/(N/2), the positive Fock-1 form.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if M not in (0, 1):
        raise ValueError("the Gaussian limit is only available for M = 0 or 1")
    m = np.asarray(m, dtype=float)
    half_n = N / 2.0
    gauss = np.exp(-m * m / half_n) / np.sqrt(np.pi * half_n)
    out = gauss if M == 0 else gauss * (2.0 * m * m / half_n)
    return float(out) if out.ndim == 0 else out


def folded_compare(N, M):
    """Sup-norm gap between the sqrt(N/2)-folded P_z and the Fock density.

    max over m of |sqrt(N/2) P_z(m) - fock_quad_density(M, m / sqrt(N/2))|;
    decreases toward zero as N grows.
    """
    if M > 4:
        raise ValueError("folded comparison supports M <= 4")
    if N < 10 or N % 2:
        raise ValueError("N must be even and >= 10")
    proj = pz_distribution(N, M)
    scale = np.sqrt(N / 2.0)
    folded = scale * proj.probs
    target = kernels.fock_quad_density(M, proj.m_values / scale)
    return float(np.abs(folded - target).max())
