"""Sparse 2-means clustering with per-feature weights.

The clustering step runs Lloyd's algorithm on the column-scaled matrix
``X * sqrt(w)``, which is the weighted squared-Euclidean dissimilarity
``sum_j w_j (x_ij - x_i'j)^2`` without materializing pairwise distances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import NumericError, Partition, _as_array, bcss

__all__ = [
    "AllZeroBcss",
    "DegenerateData",
    "SparseKmeansConfig",
    "SparseKmeansResult",
    "soft_threshold",
    "update_weights",
    "weighted_bcss",
    "weighted_two_means",
    "sparse_two_means",
]


class AllZeroBcss(NumericError):
    def __init__(self):
        super().__init__("every feature has zero between-cluster sum of squares")


class DegenerateData(NumericError):
    def __init__(self):
        super().__init__("all rows are identical under the weighted metric")


@dataclass(frozen=True)
class SparseKmeansConfig:
    s: Optional[float] = None  # None means sqrt(p), i.e. no thresholding
    n_starts: int = 20
    max_iter: int = 15
    tol: float = 1e-4
    weight_mode: str = "sqrt"
    max_sweeps: int = 100

    def __post_init__(self):
        if self.weight_mode not in ("sqrt", "linear"):
            raise ValueError(f"weight_mode must be 'sqrt' or 'linear', got {self.weight_mode!r}")
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def tuning(self, p: int) -> float:
        s = math.sqrt(p) if self.s is None else float(self.s)
        if not 1.0 <= s <= math.sqrt(p) * (1 + 1e-12):
            raise ValueError(f"s={s} outside [1, sqrt(p)={math.sqrt(p):.4g}]")
        return s


@dataclass
class SparseKmeansResult:
    partition: Partition
    weights: np.ndarray
    bcss: np.ndarray
    iterations: int
    converged: bool
    objective_history: list = field(default_factory=list)


def soft_threshold(x, delta):
    """``sign(x) * max(|x| - delta, 0)``; works on scalars and arrays."""
    if np.any(np.asarray(delta) < 0):
        raise ValueError("threshold must be nonnegative")
    out = np.sign(x) * np.maximum(np.abs(x) - delta, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def update_weights(b, s: float, max_steps: int = 60, tol: float = 1e-8) -> np.ndarray:
    """Weight update ``w = S(b, D) / ||S(b, D)||_2`` with ``||w||_1 = s``.

    ``D`` is zero when the unthresholded weights already satisfy the L1
    bound; otherwise it is found by bisection on ``[0, max b]``.
    """
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ValueError("b must be nonnegative")
    if not np.any(b > 0):
        raise AllZeroBcss()
    if s < 1:
        raise ValueError("s must be at least 1")
    w = b / np.linalg.norm(b)
    if w.sum() <= s:
        return w
    lo, hi = 0.0, float(b.max())
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        t = soft_threshold(b, mid)
        nrm = np.linalg.norm(t)
        if nrm == 0:
            hi = mid
            continue
        w = t / nrm
        l1 = w.sum()
        if abs(l1 - s) <= tol:
            break
        if l1 > s:
            lo = mid
        else:
            hi = mid
    return w


def weighted_bcss(X, w, part: Partition) -> float:
    return float(np.dot(w, bcss(X, part)))


def _lloyd(Y, c1, c2, max_sweeps):
    n = Y.shape[0]
    labels = np.zeros(n, dtype=np.int8)
    for _ in range(max_sweeps):
        d1 = ((Y - c1) ** 2).sum(axis=1)
        d2 = ((Y - c2) ** 2).sum(axis=1)
        new = np.where(d1 <= d2, 1, 2).astype(np.int8)
        for k in (1, 2):
            if not np.any(new == k):
                # empty cluster: hand it the point farthest from its centroid
                dist = np.where(new == 1, d1, d2)
                new[int(np.argmax(dist))] = k
        if np.array_equal(new, labels):
            break
        labels = new
        c1 = Y[labels == 1].mean(axis=0)
        c2 = Y[labels == 2].mean(axis=0)
    return labels


def _split_objective(Y, labels):
    grand = Y.mean(axis=0)
    tot = 0.0
    for k in (1, 2):
        sel = labels == k
        d = Y[sel].mean(axis=0) - grand
        tot += np.count_nonzero(sel) * float(d @ d)
    return tot


def weighted_two_means(X, w, rng: np.random.Generator, n_starts: int = 20,
                       max_sweeps: int = 100, init: Optional[Partition] = None) -> Partition:
    """Best-of-``n_starts`` Lloyd 2-means under feature weights ``w``.

    Each start seeds the two centroids with two distinct rows drawn
    uniformly.  ``init`` adds one extra start from that partition's
    centroids, which makes the outer sparse iteration monotone.  The
    partition with the largest weighted BCSS wins; ties go to the earlier
    start.
    """
    A = _as_array(X)
    w = np.asarray(w, dtype=float)
    Y = A * np.sqrt(w)
    n = Y.shape[0]
    if n < 2:
        raise DegenerateData()
    spread = np.ptp(Y, axis=0)
    if not np.any(spread > 1e-12 * max(1.0, float(np.abs(Y).max()))):
        raise DegenerateData()

    best, best_obj = None, -np.inf
    if init is not None:
        lab = _lloyd(Y, Y[init.labels == 1].mean(axis=0), Y[init.labels == 2].mean(axis=0), max_sweeps)
        best, best_obj = lab, _split_objective(Y, lab)
    for _ in range(n_starts):
        i = int(rng.integers(n))
        d = ((Y - Y[i]) ** 2).sum(axis=1)
        cand = np.flatnonzero(d > 0)
        j = int(cand[rng.integers(cand.size)])
        lab = _lloyd(Y, Y[i].copy(), Y[j].copy(), max_sweeps)
        obj = _split_objective(Y, lab)
        if best is None or obj > best_obj + 1e-12 * max(1.0, abs(best_obj)):
            best, best_obj = lab, obj
    return Partition(best)


def _weights_from_bcss(b, s, mode):
    if mode == "sqrt":
        return update_weights(np.sqrt(b), s)
    return update_weights(b, s)


def sparse_two_means(X, cfg: SparseKmeansConfig = SparseKmeansConfig(),
                     rng: Optional[np.random.Generator] = None) -> SparseKmeansResult:
    """Alternate weighted 2-means and the weight update until weights settle.

    In ``sqrt`` mode the update is applied to ``sqrt(b)``; with the default
    ``s = sqrt(p)`` this gives ``w_j = sqrt(b_j / sum_k b_k)``.  Iteration
    stops once the relative L1 change of the weights drops below ``cfg.tol``
    or after ``cfg.max_iter`` rounds.
    """
    A = _as_array(X)
    if rng is None:
        rng = np.random.default_rng()
    p = A.shape[1]
    s = cfg.tuning(p)
    w = np.full(p, 1.0 / math.sqrt(p))
    part = None
    history = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        part = weighted_two_means(A, w, rng, cfg.n_starts, cfg.max_sweeps, init=part)
        b = bcss(A, part)
        w_new = _weights_from_bcss(b, s, cfg.weight_mode)
        history.append(float(np.dot(w_new, b)))
        change = np.abs(w_new - w).sum() / np.abs(w).sum()
        w = w_new
        if change < cfg.tol:
            converged = True
            break
    return SparseKmeansResult(part, w, b, it, converged, history)
