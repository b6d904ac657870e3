"""Maximum-likelihood reconstruction of the excitation-number distribution.

The multinomial likelihood of the phase-averaged histogram is maximized
over the weight simplex twice, by independent routes: a monotone EM fixed
point (with support pruning and a KKT gap certificate) and a derivative-free
simplex search in the squared-parameter space.  The Akaike criterion then
selects the number cutoff K.

Counts outside the histogram range are excluded and the model probabilities
are renormalized by the in-range kernel mass, so unmodeled tails cannot
bias the fit.
"""

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from . import kernels
from .states import NumberDistribution

EM_GAP_TOL = 1e-10
EM_MAX_UPDATES = 2_000_000
SIMPLEX_RESTARTS = 4


def aic(loglik, K):
    """Akaike information criterion -2 logL + 2K.

    K free parameters: the K+1 squared parameters lose one degree of
    freedom to normalization.
    """
    return -2.0 * loglik + 2.0 * K


@lru_cache(maxsize=64)
def _log_multinomial_coeff(counts_bytes):
    counts = np.frombuffer(counts_bytes, dtype=np.int64)
    total = counts.sum()
    return float(gammaln(total + 1) - gammaln(counts + 1).sum())


def _in_range_parts(hist, km):
    if km.entries.shape[0] != hist.counts.size:
        raise ValueError("kernel matrix geometry does not match histogram")
    if not np.allclose(km.bin_edges, hist.bin_edges):
        raise ValueError("kernel matrix built for a different bin grid")
    return hist.counts.astype(float), km.entries, km.column_mass


def log_likelihood(hist, rho, km):
    """Multinomial log-likelihood of the in-range histogram under rho.

    P_nu = sum_M a[nu, M] rho_M, renormalized by the in-range kernel mass;
    includes the count-multiplicity constant ln R! - sum ln k_nu!.  Returns
    -inf (with a warning) if some populated bin has zero probability.
    """
    weights = np.asarray(getattr(rho, "rho", rho), dtype=float)
    k, a, cmass = _in_range_parts(hist, km.truncated(weights.size - 1))
    P = a @ weights
    S = cmass @ weights
    coeff = _log_multinomial_coeff(hist.counts.astype(np.int64).tobytes())
    populated = k > 0
    if np.any(P[populated] <= 0.0):
        warnings.warn("zero model probability on a populated bin; log-likelihood is -inf")
        return float("-inf")
    return float(k[populated] @ np.log(P[populated] / S)) + coeff


def em_step(rho, hist, km):
    """One EM fixed-point update of the mixture weights.

    rho'_M is proportional to rho_M sum_nu (k_nu / R) a[nu, M] / P_nu,
    divided by the in-range column mass (the conditional-likelihood form);
    zero entries are absorbing.  The log-likelihood never decreases.
    """
    weights = np.asarray(getattr(rho, "rho", rho), dtype=float)
    k, a, cmass = _in_range_parts(hist, km.truncated(weights.size - 1))
    P = a @ weights
    populated = k > 0
    updated = weights * (a[populated].T @ (k[populated] / P[populated]))
    updated /= cmass
    total = updated.sum()
    if total <= 0:
        raise ValueError("EM update annihilated all weights")
    return NumberDistribution(updated / total)


def _em_maximize(k, a, cmass, gap_tol=EM_GAP_TOL, max_updates=EM_MAX_UPDATES):
    """EM in the column-normalized mixture with pruning and a gap certificate.

    Works on rho-tilde = cmass * rho / S, for which the kernels are proper
    bin distributions; SQUAREM extrapolation (monotone-guarded) accelerates
    the fixed point and clearly inactive components are pruned.  The Lindsay
    bound R log(max_M multiplier) certifies the distance to the global
    maximum; a long plateau stops runs whose certificate saturates in
    finite precision.
    """
    R = k.sum()
    n = a.shape[1]
    atil = a / cmass[None, :]
    populated = k > 0
    kt = (k / R)[populated]
    ak = atil[populated]

    def ll_t(v):
        return float(R * (kt @ np.log(ak @ v)))

    rt = np.full(n, 1.0 / n)
    updates = 0
    gap = np.inf
    last_ll = ll_t(rt)
    plateau = 0
    while updates < max_updates:
        P = ak @ rt
        r1 = rt * (ak.T @ (kt / P))
        r1 /= r1.sum()
        r2 = r1 * (ak.T @ (kt / (ak @ r1)))
        r2 /= r2.sum()
        updates += 2
        dr = r1 - rt
        dv = (r2 - r1) - dr
        dvn = dv @ dv
        if dvn > 0:
            alpha = max(-np.sqrt((dr @ dr) / dvn), -256.0)
            cand = rt - 2.0 * alpha * dr + alpha * alpha * dv
            if np.all(cand >= 0) and cand.sum() > 0:
                cand /= cand.sum()
                cand = cand * (ak.T @ (kt / (ak @ cand)))
                cand /= cand.sum()
                updates += 1
                if ll_t(cand) >= ll_t(r2):
                    r2 = cand
        rt = r2
        if updates % 300 < 3:
            g = ak.T @ (kt / (ak @ rt))
            gmax = g.max()
            gap = R * np.log(gmax) if gmax > 1.0 else 0.0
            if gap < gap_tol:
                break
            cur = ll_t(rt)
            if cur - last_ll < 1e-12:
                plateau += 1
                if plateau >= 12:
                    break
            else:
                plateau = 0
            last_ll = cur
            prune = (((rt < 3e-8 * rt.max()) & (g < 1.0 - 1e-9)) | (rt < 1e-13)) & (rt > 0)
            if np.any(prune):
                before = ll_t(rt)
                trial = rt.copy()
                trial[prune] = 0.0
                trial /= trial.sum()
                if ll_t(trial) >= before:
                    rt = trial
    rho = rt / cmass
    rho /= rho.sum()
    return rho, updates, gap


def _theta_to_rho(theta):
    rho = theta * theta
    return rho / rho.sum()


def _negloglik_theta_factory(k, a, cmass):
    populated = k > 0
    kp = k[populated]
    ap = a[populated]

    def negll(theta):
        rho = theta * theta
        s = rho.sum()
        if not np.isfinite(s) or s <= 0.0:
            return 1e300
        rho = rho / s
        P = ap @ rho
        if np.any(P <= 0.0):
            return 1e300
        return -float(kp @ np.log(P / (cmass @ rho)))

    return negll


def _simplex_maximize(k, a, cmass, K, restart_seed, restarts=SIMPLEX_RESTARTS):
    """Nelder-Mead in theta space from seeded random restarts.

    Each restart chains fresh-simplex re-runs (with a tiny perturbation when
    progress stalls) until the improvement is below 1e-12; the squared
    normalized parametrization enforces positivity and normalization.
    """
    negll = _negloglik_theta_factory(k, a, cmass)
    gen = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=restart_seed, spawn_key=(K,))))
    best_f, best_x = np.inf, None
    for _ in range(restarts):
        x = np.abs(gen.standard_normal(K + 1))
        x /= np.linalg.norm(x)
        prev = np.inf
        stall = 0
        for _ in range(120):
            res = minimize(negll, x, method="Nelder-Mead",
                           options=dict(xatol=1e-10, fatol=1e-12,
                                        maxiter=12000, maxfev=12000, adaptive=True))
            x = res.x / np.linalg.norm(res.x)
            if prev - res.fun < 1e-12:
                stall += 1
                if stall >= 2:
                    break
                x = x + 1e-6 * gen.standard_normal(x.size)
            else:
                stall = 0
            prev = res.fun
        if res.fun < best_f:
            best_f, best_x = res.fun, res.x
    return _theta_to_rho(best_x), -best_f


@dataclass
class FixedKFit:
    """Both-optimizer fit at a fixed cutoff, with the agreement record."""

    rho: NumberDistribution
    loglik: float
    em_loglik: float
    em_updates: int
    em_certificate: float
    simplex_loglik: float
    simplex_restarts: int
    agreement_loglik_gap: float
    agreement_rho_gap: float
    converged: bool


@dataclass
class KRecord:
    k: int
    loglik: float
    aic: float
    fit: FixedKFit


@dataclass
class ReconstructionResult:
    per_k: list
    best_k: int
    best_rho: NumberDistribution
    eta: float
    total_counts: int
    warnings: list = field(default_factory=list)

    @property
    def best_record(self):
        return next(r for r in self.per_k if r.k == self.best_k)


def fit_fixed_k(hist, eta, K, km=None, restart_seed=0):
    """Maximize the likelihood at cutoff K by both routes, keep the better.

    Runs the EM fixed point from a uniform start and the theta-space simplex
    search from seeded random restarts; returns a FixedKFit carrying the
    winner and the cross-optimizer agreement gaps.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    if km is None:
        km = kernels.build_kernel_matrix(K, eta, hist.bin_edges)
    km_k = km.truncated(K)
    k, a, cmass = _in_range_parts(hist, km_k)
    if K == 0:
        rho = NumberDistribution(np.ones(1))
        ll = log_likelihood(hist, rho, km_k)
        return FixedKFit(rho, ll, ll, 0, 0.0, ll, SIMPLEX_RESTARTS, 0.0, 0.0, True)

    rho_em, em_updates, certificate = _em_maximize(k, a, cmass)
    rho_nm, _ = _simplex_maximize(k, a, cmass, K, restart_seed)
    ll_em = log_likelihood(hist, rho_em, km_k)
    ll_nm = log_likelihood(hist, rho_nm, km_k)
    gap_ll = abs(ll_em - ll_nm)
    gap_rho = float(np.abs(rho_em - rho_nm).max())
    if ll_em >= ll_nm:
        winner = rho_em
        ll = ll_em
    else:
        winner = rho_nm
        ll = ll_nm
    converged = bool(certificate < 1e-6 or gap_ll < 1e-6)
    return FixedKFit(NumberDistribution(winner), ll, ll_em, em_updates, certificate,
                     ll_nm, SIMPLEX_RESTARTS, gap_ll, gap_rho, converged)


def select_model(hist, eta, k_max=16, restart_seed=0):
    """Fit every cutoff K in 0..k_max and select the AIC minimizer.

    Ties break toward smaller K.  Non-convergence of a fit is recorded as a
    warning on the result, never raised.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    km = kernels.build_kernel_matrix(k_max, eta, hist.bin_edges)
    records = []
    warns = []
    for K in range(k_max + 1):
        fit = fit_fixed_k(hist, eta, K, km=km, restart_seed=restart_seed)
        records.append(KRecord(K, fit.loglik, aic(fit.loglik, K), fit))
        if not fit.converged:
            warns.append(f"fit at K={K} did not converge to certificate tolerance")
    aics = np.array([r.aic for r in records])
    best_k = int(np.argmin(aics))
    return ReconstructionResult(records, best_k, records[best_k].fit.rho,
                                float(eta), int(hist.counts.sum()), warns)
