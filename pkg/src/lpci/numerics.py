"""Seedable numerical primitives used by the tests and the benchmark harness."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import DimensionMismatch, DomainError, EmptyInput, NotPsd

_MAX_SEED = 2**64 - 1


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------
def _seed_sequence(seed: int, index: tuple[int, ...] = ()) -> np.random.SeedSequence:
    seed = int(seed)
    if not 0 <= seed <= _MAX_SEED:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.SeedSequence(seed, spawn_key=tuple(int(i) for i in index))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_seed_sequence(seed)))


def derive_child(seed: int, *index: int) -> np.random.Generator:
    """Independent generator for stream ``index`` under ``seed``.

    Streams are keyed by hashing ``(seed, index)`` through ``SeedSequence``;
    distinct index tuples give statistically independent streams.
    """
    return np.random.Generator(np.random.PCG64(_seed_sequence(seed, index)))


def child_seed(seed: int, *index: int) -> int:
    """A 64-bit integer seed derived from ``(seed, index)``."""
    state = _seed_sequence(seed, index).generate_state(1, dtype=np.uint64)
    return int(state[0])


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------
def _square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def inv_sqrt_psd(m: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Return ``(m + ridge * I)^{-1/2}`` for a symmetric PSD ``m``.

    Eigenvalues that are negative only through round-off are clipped to zero
    before the ridge is added.
    """
    m = _square(m)
    if ridge < 0:
        raise DomainError("ridge must be nonnegative")
    sym = 0.5 * (m + m.T)
    w, v = np.linalg.eigh(sym)
    radius = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w[0] < -1e-8 * radius - ridge:
        raise NotPsd(f"smallest eigenvalue {w[0]:.3e} is below tolerance")
    shifted = np.clip(w, 0.0, None) + ridge
    if np.any(shifted <= 0.0):
        raise NotPsd("matrix is singular and no ridge was supplied")
    return (v * shifted**-0.5) @ v.T


# ---------------------------------------------------------------------------
# chi-square distribution
# ---------------------------------------------------------------------------
_GAMMA_EPS = 1e-16
_GAMMA_ITMAX = 10_000


def _gamma_series(a: float, x: float) -> float:
    # lower regularized P(a, x), valid (fast) for x < a + 1
    ap = a
    term = total = 1.0 / a
    for _ in range(_GAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cont_frac(a: float, x: float) -> float:
    # upper regularized Q(a, x) by modified Lentz, valid for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_ITMAX):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_lower_gamma(a: float, x: float) -> float:
    if a <= 0:
        raise DomainError("shape parameter must be positive")
    if x <= 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cont_frac(a, x)


def regularized_upper_gamma(a: float, x: float) -> float:
    if a <= 0:
        raise DomainError("shape parameter must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cont_frac(a, x)


def chi2_cdf(x: float, dof: int) -> float:
    return regularized_lower_gamma(0.5 * dof, 0.5 * float(x))


def chi2_sf(x: float, dof: int) -> float:
    """Upper tail ``P(chi2(dof) > x)``, computed without cancellation."""
    return regularized_upper_gamma(0.5 * dof, 0.5 * float(x))


def chi2_quantile(dof: int, prob: float) -> float:
    if dof < 1:
        raise DomainError("dof must be >= 1")
    if not 0.0 < prob < 1.0:
        raise DomainError(f"prob must lie in (0, 1), got {prob}")
    hi = max(1.0, float(dof))
    while chi2_cdf(hi, dof) < prob:
        hi *= 2.0
    lo = 0.0
    return brentq(lambda t: chi2_cdf(t, dof) - prob, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


# ---------------------------------------------------------------------------
# null law of |N(0, I_J)|_p^p
# ---------------------------------------------------------------------------
DEFAULT_MC_SAMPLES = 200_000


def lp_null_sample(p: float, j_count: int, mc_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of ``sum_j |Z_j|^p`` with ``Z ~ N(0, I_J)``."""
    if p < 1 or j_count < 1 or mc_samples < 1:
        raise DomainError("p >= 1, j_count >= 1 and mc_samples >= 1 are required")
    z = rng.standard_normal((mc_samples, j_count))
    if p == 1:
        return np.abs(z).sum(axis=1)
    if p == 2:
        return (z * z).sum(axis=1)
    return (np.abs(z) ** p).sum(axis=1)


def lp_null_quantile(
    p: float,
    j_count: int,
    prob: float,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    rng: np.random.Generator | None = None,
) -> float:
    if not 0.0 < prob < 1.0:
        raise DomainError(f"prob must lie in (0, 1), got {prob}")
    if p == 2:
        return chi2_quantile(j_count, prob)
    if rng is None:
        raise DomainError("a generator is required for the Monte-Carlo null")
    return float(np.quantile(lp_null_sample(p, j_count, mc_samples, rng), prob))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------
def sample_mvn(mean, cov, count: int, rng: np.random.Generator) -> np.ndarray:
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    cov = _square(np.atleast_2d(cov))
    d = mean.shape[0]
    if cov.shape[0] != d:
        raise DimensionMismatch(f"mean has dim {d} but cov is {cov.shape}")
    trace = float(np.trace(cov))
    if trace == 0.0 and not np.any(cov):
        chol = np.zeros((d, d))
    else:
        jitter = 1e-10 * abs(trace) / d
        try:
            chol = np.linalg.cholesky(0.5 * (cov + cov.T) + jitter * np.eye(d))
        except np.linalg.LinAlgError as exc:
            raise NotPsd("covariance is not positive semi-definite") from exc
    z = rng.standard_normal((count, d))
    return mean + z @ chol.T


# ---------------------------------------------------------------------------
# p-value summaries
# ---------------------------------------------------------------------------
def _pvalues(pv) -> np.ndarray:
    pv = np.asarray(pv, dtype=np.float64).ravel()
    if pv.size == 0:
        raise EmptyInput("no p-values supplied")
    if np.any((pv < 0) | (pv > 1)) or not np.all(np.isfinite(pv)):
        raise DomainError("p-values must lie in [0, 1]")
    return pv


def ks_against_cdf(values, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Two-sided Kolmogorov-Smirnov distance between the sample and ``cdf``."""
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = x.size
    if n == 0:
        raise EmptyInput("no values supplied")
    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - f, f - (i - 1) / n)))


def ks_uniform(pv) -> float:
    return ks_against_cdf(_pvalues(pv), lambda t: t)


def ks_chi2(values, dof: int) -> float:
    return ks_against_cdf(values, lambda t: np.array([chi2_cdf(v, dof) for v in t]))


def aupc(pv) -> float:
    """Area under the empirical CDF of the p-values on [0, 1]."""
    return float(1.0 - np.mean(_pvalues(pv)))
