"""Null distributions of sorted feature weights and Kolmogorov-Smirnov tests.

Three estimators of the expected weight order statistics under "no
bicluster" are provided:

* ``beta``: sqrt-mode weights of iid chi-square(1) BCSS values, whose squared
  marginals are Beta(1/2, (p-1)/2);
* ``permutation``: weights recomputed on column-wise permuted data against a
  fixed partition;
* ``chisq``: weights of the log variance-gap criterion with chi-square
  distributed cluster variances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BiclustError, Partition, _as_array, bcss

__all__ = [
    "DomainError",
    "NullOrderStats",
    "KsResult",
    "beta_cdf",
    "kolmogorov_sf",
    "ks_test_beta",
    "ks_two_sample",
    "ks_monte_carlo",
    "beta_null_order_stats",
    "permutation_null_order_stats",
    "chisq_variance_null_order_stats",
]

_EPS = 1e-15
_TINY = 1e-300


class DomainError(BiclustError, ValueError):
    pass


@dataclass
class NullOrderStats:
    expected: np.ndarray
    method: str
    replicates: int
    samples: Optional[np.ndarray] = None  # replicates x p, each row sorted

    @property
    def pooled(self) -> np.ndarray:
        return np.sort(self.samples, axis=None)


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    alpha: float

    @property
    def reject(self) -> bool:
        return self.p_value < self.alpha


def _betacf(x, a, b):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, 10000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})")


def beta_cdf(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if not (a > 0 and b > 0):
        raise DomainError("beta parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} outside [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    lnfront = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
               + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(lnfront)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(x, a, b) / a
    return 1.0 - front * _betacf(1.0 - x, b, a) / b


def beta_cdf_array(x, a: float, b: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.array([beta_cdf(float(v), a, b) for v in x.ravel()]).reshape(x.shape)


def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution.

    ``Q(l) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 l^2)``.  For small ``l`` that
    series converges slowly, so the equivalent theta-function form
    ``1 - sqrt(2 pi)/l sum_k exp(-(2k-1)^2 pi^2 / (8 l^2))`` is used instead.
    """
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        if lam < 0.04:
            return 1.0
        s = 0.0
        for k in range(1, 100):
            t = math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8 * lam * lam))
            s += t
            if t < 1e-16:
                break
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * s))
    s = 0.0
    for k in range(1, 100):
        t = math.exp(-2.0 * k * k * lam * lam)
        s += t if k % 2 == 1 else -t
        if t < 1e-12:
            break
    return min(1.0, max(0.0, 2.0 * s))


def _ks_sup(sorted_sample, cdf_values):
    n = sorted_sample.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf_values), np.max(cdf_values - (i - 1) / n), 0.0))


def ks_test_beta(w, alpha: float = 0.05) -> KsResult:
    """One-sample KS test of squared weights against Beta(1/2, (p-1)/2)."""
    w = np.asarray(w, dtype=float)
    p = w.size
    if p < 2:
        raise ValueError("need at least two weights")
    u = np.sort(np.clip(w * w, 0.0, 1.0))
    F = beta_cdf_array(u, 0.5, (p - 1) / 2.0)
    D = _ks_sup(u, F)
    rp = math.sqrt(p)
    pval = kolmogorov_sf((rp + 0.12 + 0.11 / rp) * D) if D > 0 else 1.0
    return KsResult(D, pval, alpha)


def ks_two_sample(x, y, alpha: float = 0.05) -> KsResult:
    """Two-sample KS test with the asymptotic Kolmogorov p-value."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    n1, n2 = x.size, y.size
    pooled = np.concatenate([x, y])
    cdf1 = np.searchsorted(x, pooled, side="right") / n1
    cdf2 = np.searchsorted(y, pooled, side="right") / n2
    D = float(np.max(np.abs(cdf1 - cdf2)))
    en = math.sqrt(n1 * n2 / (n1 + n2))
    pval = kolmogorov_sf((en + 0.12 + 0.11 / en) * D) if D > 0 else 1.0
    return KsResult(D, pval, alpha)


def _ks_distance_to(x_sorted, pooled):
    n, m = x_sorted.size, pooled.size
    hi = np.searchsorted(pooled, x_sorted, side="right") / m
    lo = np.searchsorted(pooled, x_sorted, side="left") / m
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - lo), np.max(hi - (i - 1) / n)))


def ks_monte_carlo(w, null: NullOrderStats, alpha: float = 0.05) -> KsResult:
    """Two-sample KS distance to the pooled null, with a Monte Carlo p-value.

    Each null replicate's own distance to the pool forms the reference
    distribution.  Needed when the weights of one draw share a random
    normalizer, which makes the asymptotic Kolmogorov p-value too small.
    """
    pooled = null.pooled
    D = _ks_distance_to(np.sort(np.asarray(w, dtype=float)), pooled)
    ref = np.array([_ks_distance_to(row, pooled) for row in null.samples])
    pval = (1.0 + np.count_nonzero(ref >= D - 1e-12)) / (1.0 + ref.size)
    return KsResult(D, float(pval), alpha)


def _summarize(W, method):
    W = np.sort(W, axis=1)
    return NullOrderStats(W.mean(axis=0), method, W.shape[0], W)


def beta_null_order_stats(p: int, replicates: int = 1000,
                          rng: Optional[np.random.Generator] = None) -> NullOrderStats:
    """Monte Carlo expected order statistics of sqrt-mode null weights.

    Each replicate draws ``b_1..b_p`` iid chi-square(1) and forms
    ``w_j = sqrt(b_j / sum_k b_k)``, a draw from the joint law of the
    unit-norm weight vector.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    rng = np.random.default_rng() if rng is None else rng
    Z = rng.standard_normal((replicates, p))
    B = Z * Z
    W = np.sqrt(B / B.sum(axis=1, keepdims=True))
    return _summarize(W, "beta")


def permutation_null_order_stats(X, part: Partition, B: int = 100,
                                 rng: Optional[np.random.Generator] = None,
                                 weight_mode: str = "sqrt") -> NullOrderStats:
    """Order statistics of weights on column-permuted data, partition held fixed.

    Every column is shuffled independently, which breaks the row structure
    while keeping each feature's marginal distribution.
    """
    A = _as_array(X)
    rng = np.random.default_rng() if rng is None else rng
    W = np.empty((B, A.shape[1]))
    for k in range(B):
        b = bcss(rng.permuted(A, axis=0), part)
        v = np.sqrt(b) if weight_mode == "sqrt" else b
        nrm = np.linalg.norm(v)
        W[k] = v / nrm if nrm > 0 else v
    return _summarize(W, "permutation")


def chisq_variance_null_order_stats(n1: int, n2: int, p: int, replicates: int = 1000,
                                    rng: Optional[np.random.Generator] = None,
                                    standardized: bool = False) -> NullOrderStats:
    """Null weights of the log variance-gap criterion.

    The weights are ``b / ||b||`` with ``b_j = log(|V1_j - V2_j| + 1)``.  By
    default the cluster variances are drawn as ``chi2(n_k) / n_k`` (known
    mean, unit variance).

    With ``standardized=True`` they follow the exact law for a column that
    was centered and scaled to unit sample variance before the fixed
    partition's divisor-``n_k`` variances were taken::

        V_k = (n - 1) / n_k * W_k / (W_1 + W_2 + B)

    with ``W_k ~ chi2(n_k - 1)`` (within-cluster) and ``B ~ chi2(1)``
    (between-cluster) independent.
    """
    if n1 < 2 or n2 < 2:
        raise ValueError("cluster sizes must be at least 2")
    rng = np.random.default_rng() if rng is None else rng
    if standardized:
        n = n1 + n2
        W1 = rng.chisquare(n1 - 1, size=(replicates, p))
        W2 = rng.chisquare(n2 - 1, size=(replicates, p))
        T = W1 + W2 + rng.chisquare(1, size=(replicates, p))
        V1 = (n - 1) / n1 * W1 / T
        V2 = (n - 1) / n2 * W2 / T
    else:
        V1 = rng.chisquare(n1, size=(replicates, p)) / n1
        V2 = rng.chisquare(n2, size=(replicates, p)) / n2
    Bv = np.log1p(np.abs(V1 - V2))
    W = Bv / np.linalg.norm(Bv, axis=1, keepdims=True)
    return _summarize(W, "chisq")
