"""Shared numerical helpers: stable log-sums, quadrature, spin enumeration."""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import logsumexp

__all__ = [
    "logsumexp",
    "log_mean_exp",
    "gauss_hermite",
    "chol_psd",
    "enumerate_configs",
    "spins_of_index",
    "Estimate",
    "mean_se",
    "log_mean_exp_jackknife",
]


def log_mean_exp(a, axis=None):
    """log of the arithmetic mean of exp(a), max-shifted."""
    a = np.asarray(a, dtype=float)
    n = a.size if axis is None else a.shape[axis]
    return logsumexp(a, axis=axis) - math.log(n)


_GH_CACHE = {}


def gauss_hermite(n=40):
    """Nodes and weights for E f(Z), Z ~ N(0,1).

    Returns (x, w) with sum(w) = 1 such that sum(w * f(x)) approximates
    E f(Z) exactly for polynomials of degree < 2n.
    """
    if n not in _GH_CACHE:
        x, w = hermegauss(n)
        _GH_CACHE[n] = (x, w / w.sum())
    return _GH_CACHE[n]


def chol_psd(cov, jitter=1e-10):
    """Cholesky factor of a symmetric PSD matrix, with diagonal jitter.

    Overlap-derived covariance matrices are PSD by construction but can be
    numerically semidefinite (repeated leaves give identical rows), so a tiny
    ridge is added before factorizing.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    scale = max(1.0, float(np.max(np.abs(cov))))
    for boost in (1.0, 1e3, 1e6):
        try:
            return np.linalg.cholesky(cov + jitter * boost * scale * np.eye(n))
        except np.linalg.LinAlgError:
            continue
    # Fall back to an eigendecomposition square root.
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


def enumerate_configs(N):
    """All 2^N spin configurations as a (2^N, N) array of -1/+1 values.

    Row i maps bit b of i to spin 2*bit - 1 at site b+1, i.e. the low bit is
    site 1. This order is fixed so Gibbs tables are bit-for-bit comparable.
    """
    if N > 24:
        raise ValueError(f"N={N} too large to enumerate (guard: N <= 24)")
    idx = np.arange(2**N, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(N)) & 1
    return (2 * bits - 1).astype(np.int8)


def spins_of_index(i, N):
    """Configuration row i of enumerate_configs(N), without building the table."""
    bits = (int(i) >> np.arange(N)) & 1
    return (2 * bits - 1).astype(np.int8)


@dataclass
class Estimate:
    """A Monte Carlo estimate with its standard error.

    bias holds a jackknife (or analytic) bias proxy when the estimator is a
    nonlinear functional of sample means; 0.0 for plain means.
    """

    value: float
    se: float
    n: int = 0
    bias: float = 0.0

    def __iter__(self):  # allows `val, se = estimate`
        return iter((self.value, self.se))

    def within(self, target, k):
        return abs(self.value - target) <= k * max(self.se, 1e-300)


def mean_se(samples):
    """Estimate(mean, standard error of the mean) for a 1-d sample array."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(m, se, n)


def log_mean_exp_jackknife(logs):
    """Estimate of log E X from log-samples, with delete-one jackknife.

    The plain estimator log(mean exp(l_i)) is biased downward in the sample
    size; the jackknife both corrects the leading 1/n bias term and yields a
    standard error for the log-scale value.
    """
    logs = np.asarray(logs, dtype=float)
    n = logs.size
    full = log_mean_exp(logs)
    if n < 2:
        return Estimate(float(full), 0.0, n)
    # delete-one log-mean-exp via log(n*mean - exp(l_i)) computed stably
    total = logsumexp(logs)
    with np.errstate(invalid="ignore"):
        loo = _logsubexp(total, logs) - math.log(n - 1)
    bad = ~np.isfinite(loo)
    if np.any(bad):
        # a single sample dominates the sum; jackknife SE is unreliable, fall
        # back to the plain estimator with a conservative SE from the spread
        se = float(np.std(logs, ddof=1) / math.sqrt(n))
        return Estimate(float(full), se, n, bias=0.0)
    jk_mean = float(np.mean(loo))
    value = float(n * full - (n - 1) * jk_mean)
    se = float(math.sqrt((n - 1) / n * np.sum((loo - jk_mean) ** 2)))
    return Estimate(value, se, n, bias=float(full - value))


def _logsubexp(a, b):
    """log(exp(a) - exp(b)) elementwise, a >= b."""
    b = np.asarray(b, dtype=float)
    diff = b - a
    with np.errstate(divide="ignore"):
        return a + np.log1p(-np.exp(diff))


def combine_se(*ses):
    """Standard error of a difference/sum of independent estimates."""
    return math.sqrt(sum(float(s) ** 2 for s in ses))


def jackknife_means(X, fn):
    """Delete-one jackknife for a smooth function of column means.

    X: (n, d) per-draw statistics; fn maps a length-d mean vector to a float.
    Returns an Estimate whose value is the bias-corrected jackknife value and
    whose SE is the jackknife standard error. This is the workhorse for
    ratio/product estimands (invariance residuals, GG brackets, ...).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    full = float(fn(X.mean(axis=0)))
    if n < 2:
        return Estimate(full, 0.0, n)
    total = X.sum(axis=0)
    loo = (total[None, :] - X) / (n - 1)
    vals = np.array([fn(row) for row in loo])
    jk_mean = float(vals.mean())
    value = n * full - (n - 1) * jk_mean
    se = math.sqrt((n - 1) / n * float(np.sum((vals - jk_mean) ** 2)))
    return Estimate(value, se, n, bias=full - value)
