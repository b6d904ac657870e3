"""Shot-by-shot simulation of the balanced-polarimeter observable.

Each shot realizes Q = sqrt(eta) (sin(theta) q + cos(theta) p) + sqrt(1-eta) q_V
for a fresh local-oscillator phase theta, with q_V the probe shot noise
(vacuum Gaussian, variance 1/2).  Randomness is counter-based: shot i always
consumes Philox block i of the configured seed, so chunked or parallel
generation reproduces the serial stream bit for bit.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtri

from . import states

PHASE_RANDOM = "random"
PHASE_GRID = "grid"

_VACUUM_SIGMA = np.sqrt(0.5)

# One Philox counter block = 4 uniform doubles = one measurement shot:
# phase, two state draws, probe noise.
DRAWS_PER_SHOT = 4


@dataclass(frozen=True)
class PhysicalParams:
    """Field-atom coupling g, interaction time tau, probe photons n, atoms N."""

    g: float
    tau: float
    n: float
    atoms: float

    def __post_init__(self):
        for name in ("g", "tau", "n", "atoms"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be strictly positive, got {v}")


@dataclass(frozen=True)
class MeasurementConfig:
    eta: float
    shots: int
    bin_count: int = 100
    q_range: float = 6.0
    seed: int = 0
    phase_mode: str = PHASE_RANDOM

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.bin_count < 2:
            raise ValueError("bin_count must be >= 2")
        if self.q_range <= 0:
            raise ValueError("q_range must be positive")
        if self.phase_mode not in (PHASE_RANDOM, PHASE_GRID):
            raise ValueError(f"unknown phase_mode {self.phase_mode!r}")
        if self.seed < 0 or self.seed > 2 ** 64 - 1:
            raise ValueError("seed must fit an unsigned 64-bit integer")

    @property
    def bin_edges(self):
        return np.linspace(-self.q_range, self.q_range, self.bin_count + 1)


@dataclass
class QuadratureHistogram:
    """Binned counts of measured Q values, with out-of-range counts kept."""

    bin_edges: np.ndarray
    counts: np.ndarray
    total: int
    underflow: int
    overflow: int

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin_edges must be strictly increasing")
        if int(self.counts.sum()) + self.underflow + self.overflow != self.total:
            raise ValueError("counts + underflow + overflow must equal total")

    @property
    def bin_centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self):
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def in_range_total(self):
        return int(self.counts.sum())


def eta_from_physical(params):
    """Detection efficiency from physical parameters.

    eta = s^2 / (s^2 + 2n) with signal amplitude s = g tau n sqrt(N/2);
    the probe contributes shot-noise power 2n.
    """
    s = params.g * params.tau * params.n * np.sqrt(params.atoms / 2.0)
    return float(s * s / (s * s + 2.0 * params.n))


def linearization_error(params, m):
    """Relative error of the linearized polarimeter signal at J_z = m.

    Compares the exact rotation of the classical Stokes vector (-n, 0) with
    its small-angle form: |sin(x) - x| / |x| at x = g tau m.
    """
    x = params.g * params.tau * m
    if x == 0:
        return 0.0
    return float(abs(np.sin(x) - x) / abs(x))


def shot_uniforms(seed, start, count):
    """Uniform draws for shots start..start+count-1, shape (count, 4).

    Shot i always maps to Philox counter block i of the seed, so any
    chunking of the shot range reproduces the serial stream exactly.
    """
    bg = np.random.Philox(key=seed)
    if start:
        bg.advance(int(start))
    return np.random.Generator(bg).random((int(count), DRAWS_PER_SHOT))


def simulate_shot(state, eta, theta, rng):
    """One measurement: sqrt(eta) q_state + sqrt(1-eta) q_vacuum."""
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    q_s = states.sample_quadrature(state, theta, rng)
    q_v = rng.standard_normal() * _VACUUM_SIGMA
    return float(np.sqrt(eta) * q_s + np.sqrt(1.0 - eta) * q_v)


def simulate_q(state, cfg, start=0, count=None):
    """Measured Q values for shots start..start+count-1 under cfg.

    The full record is simulate_q(state, cfg); workers may generate disjoint
    ranges and concatenate, reproducing it exactly.
    """
    if count is None:
        count = cfg.shots - start
    if start < 0 or count < 0 or start + count > cfg.shots:
        raise ValueError("shot range outside 0..cfg.shots")
    U = shot_uniforms(cfg.seed, start, count)
    if cfg.phase_mode == PHASE_RANDOM:
        theta = 2.0 * np.pi * U[:, 0]
    else:
        theta = 2.0 * np.pi * (start + np.arange(count)) / cfg.shots
    q_s = states.quadrature_from_uniform(state, theta, U[:, 1:3])
    q_v = ndtri(U[:, 3]) * _VACUUM_SIGMA
    return np.sqrt(cfg.eta) * q_s + np.sqrt(1.0 - cfg.eta) * q_v


def simulate_histogram(state, cfg):
    """Accumulate cfg.shots phase-averaged measurements into the bin grid."""
    q = simulate_q(state, cfg)
    edges = cfg.bin_edges
    counts, _ = np.histogram(q, bins=edges)
    underflow = int(np.count_nonzero(q < edges[0]))
    overflow = int(np.count_nonzero(q > edges[-1]))
    return QuadratureHistogram(edges, counts, cfg.shots, underflow, overflow)


def _state_half_width(state):
    """Integration half-width safely covering the state's quadrature support."""
    if state.kind == states.SQUEEZED_VACUUM:
        return 14.0 * np.exp(state.xi) * _VACUUM_SIGMA
    if state.kind == states.DICKE:
        return 2.0 * np.sqrt(2.0 * state.m + 1.0) + 12.0
    if state.kind == states.NUMBER_MIXTURE:
        mmax = state.mixture_weights.size - 1
        return 2.0 * np.sqrt(2.0 * mmax + 1.0) + 12.0
    return 12.0


def probe_density(q):
    """Shot-noise density of the probe vacuum, exp(-q^2)/sqrt(pi)."""
    return np.exp(-np.asarray(q, dtype=float) ** 2) / np.sqrt(np.pi)


def smeared_density(state, theta, eta, q):
    """Loss-smeared quadrature density at phase theta by adaptive quadrature.

    Evaluates the convolution of the state density with the probe Gaussian,
    including the 1/sqrt(1-eta) Jacobian that normalizes it.  eta = 1 is the
    documented passthrough to quad_density.  Absolute accuracy 1e-9.

    For eta > 0.9 the probe factor narrows toward a delta in the state
    variable, so the integral is taken over the probe variable instead
    (identical by change of variables) to keep the quadrature reliable.
    """
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if eta == 1.0:
        return quad_density_passthrough(state, theta, q)
    if np.ndim(q) > 0:
        return np.array([smeared_density(state, theta, eta, qi) for qi in np.asarray(q, float)])
    q = float(q)
    root_eta = np.sqrt(eta)
    root_loss = np.sqrt(1.0 - eta)
    if eta > 0.9:
        def integrand(u):
            qs = (q - root_loss * u) / root_eta
            return states.quad_density(state, theta, qs) * probe_density(u) / root_eta
        # probe factor is O(1) wide in u; the state factor only matters
        # where the probe survives, so +-12 covers the support
        lo, hi = -12.0, 12.0
        breaks = [q / root_loss] if abs(q) < 12.0 * root_loss else []
    else:
        def integrand(qs):
            u = (q - root_eta * qs) / root_loss
            return states.quad_density(state, theta, qs) * probe_density(u) / root_loss
        # the probe factor can be a narrow bump the initial adaptive grid
        # would miss; anchor subdivision at its center
        w_probe = np.sqrt(0.5) * root_loss / root_eta
        center = q / root_eta
        lo = min(-_state_half_width(state), center - 12.0 * w_probe)
        hi = max(_state_half_width(state), center + 12.0 * w_probe)
        breaks = [0.0, center - 5.0 * w_probe, center, center + 5.0 * w_probe]
    pts = sorted(x for x in breaks if lo < x < hi)
    value, _ = quad(integrand, lo, hi, epsabs=1e-12, epsrel=1e-11, limit=400,
                    points=pts or None)
    return float(value)


def quad_density_passthrough(state, theta, q):
    return states.quad_density(state, theta, q)


def phase_averaged_smeared_density(state, eta, q, quarter_nodes=48):
    """Numerical LO-phase average of smeared_density, the Eq.-style oracle.

    Gauss-Legendre nodes over a quarter period; every supported state's
    density has period pi in theta and is even about theta = 0 and pi/2,
    so the quarter average equals the full 2 pi average.
    """
    nodes, weights = np.polynomial.legendre.leggauss(quarter_nodes)
    theta = 0.25 * np.pi * (nodes + 1.0)
    w = 0.25 * np.pi * weights
    qs = np.atleast_1d(np.asarray(q, dtype=float))
    acc = np.zeros_like(qs)
    for th, wi in zip(theta, w):
        acc += wi * np.asarray([smeared_density(state, th, eta, qi) for qi in qs])
    out = acc * (2.0 / np.pi)
    return float(out[0]) if np.ndim(q) == 0 else out
