"""Variance biclusters.

Observations are exchanged between two clusters to maximize
``sum_j w_j log(|s2_1j - s2_2j| + 1)``, where ``s2_kj`` is the variance
(divisor ``n_k``) of feature ``j`` in cluster ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Bicluster, BiclustError, DataMatrix, Partition, _as_array
from .mean_biclust import BiclustConfig, LayerSequence, _test_and_cut, run_layers
from .nulls import chisq_variance_null_order_stats, ks_monte_carlo
from .sparse_kmeans import SparseKmeansConfig, update_weights

__all__ = [
    "ClusterTooSmall",
    "ZeroVariance",
    "VarClusterResult",
    "variance_gap",
    "variance_two_cluster",
    "variance_init",
    "sparse_variance_cluster",
    "best_variance_cluster",
    "fit_variance_primary",
    "fit_variance_sequence",
    "residualize_variance",
]

MIN_CLUSTER = 2


class ClusterTooSmall(BiclustError):
    pass


class ZeroVariance(BiclustError):
    def __init__(self, j: int):
        super().__init__(f"feature {j} has zero variance inside the bicluster")
        self.j = j


@dataclass
class VarClusterResult:
    partition: Partition
    weights: np.ndarray
    b: np.ndarray
    objective: float
    sweeps: int
    iterations: int = 1
    converged: bool = True


def variance_gap(X, part: Partition) -> np.ndarray:
    """``b_j = log(|s2_1j - s2_2j| + 1)`` with divisor-``n_k`` variances."""
    A = _as_array(X)
    v1 = A[part.labels == 1].var(axis=0)
    v2 = A[part.labels == 2].var(axis=0)
    return np.log1p(np.abs(v1 - v2))


def _crit(w, n1, S1, Q1, n2, S2, Q2):
    v1 = Q1 / n1 - (S1 / n1) ** 2
    v2 = Q2 / n2 - (S2 / n2) ** 2
    return float(np.dot(w, np.log1p(np.abs(v1 - v2))))


def variance_two_cluster(X, w, init: Partition, max_sweeps: int = 50) -> VarClusterResult:
    """Greedy first-improvement exchange on the weighted variance-gap criterion.

    Observations are visited in index order; a move is kept only if it
    strictly raises the criterion and leaves both clusters with at least two
    members.  Stops after a sweep with no move or after ``max_sweeps``.
    """
    A = _as_array(X)
    w = np.asarray(w, dtype=float)
    if init.n1 < MIN_CLUSTER or init.n2 < MIN_CLUSTER:
        raise ClusterTooSmall(f"initial clusters have sizes {init.n1}, {init.n2}")
    lab = init.labels.copy()
    A2 = A * A
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        # fresh sums each sweep keep incremental round-off from accumulating
        in1 = lab == 1
        n = [None, int(in1.sum()), int((~in1).sum())]
        S = [None, A[in1].sum(axis=0), A[~in1].sum(axis=0)]
        Q = [None, A2[in1].sum(axis=0), A2[~in1].sum(axis=0)]
        cur = _crit(w, n[1], S[1], Q[1], n[2], S[2], Q[2])
        moved = False
        for i in range(A.shape[0]):
            src = int(lab[i])
            dst = 3 - src
            if n[src] - 1 < MIN_CLUSTER:
                continue
            x, x2 = A[i], A2[i]
            Ss, Qs = S[src] - x, Q[src] - x2
            Sd, Qd = S[dst] + x, Q[dst] + x2
            if src == 1:
                new = _crit(w, n[1] - 1, Ss, Qs, n[2] + 1, Sd, Qd)
            else:
                new = _crit(w, n[1] + 1, Sd, Qd, n[2] - 1, Ss, Qs)
            if new > cur + 1e-12 * max(1.0, abs(cur)):
                S[src], Q[src], S[dst], Q[dst] = Ss, Qs, Sd, Qd
                n[src] -= 1
                n[dst] += 1
                lab[i] = dst
                cur = new
                moved = True
        if not moved:
            break
    part = Partition(lab)
    b = variance_gap(A, part)
    return VarClusterResult(part, w, b, float(np.dot(w, b)), sweeps)


def variance_init(X) -> Partition:
    """Rows with the largest across-feature variance form cluster 1.

    The top ``ceil(n/2)`` rows go to cluster 1; ties favour lower indices.
    """
    A = _as_array(X)
    n = A.shape[0]
    if n < 4:
        raise ClusterTooSmall("variance initialization needs at least 4 observations")
    rv = A.var(axis=1)
    order = np.lexsort((np.arange(n), -rv))
    in1 = np.zeros(n, dtype=bool)
    in1[order[: math.ceil(n / 2)]] = True
    return Partition.from_mask(in1)


def _random_init(n, rng):
    perm = rng.permutation(n)
    in1 = np.zeros(n, dtype=bool)
    in1[perm[: math.ceil(n / 2)]] = True
    return Partition.from_mask(in1)


def sparse_variance_cluster(X, cfg: SparseKmeansConfig = SparseKmeansConfig(),
                            rng: Optional[np.random.Generator] = None,
                            init: str = "variance", max_sweeps: int = 50) -> VarClusterResult:
    """Alternate the exchange step and the soft-threshold weight update.

    Convergence uses the same relative L1 weight-change rule as sparse
    2-means.
    """
    A = _as_array(X)
    p = A.shape[1]
    s = cfg.tuning(p)
    if init == "variance":
        part = variance_init(A)
    elif init == "random":
        part = _random_init(A.shape[0], np.random.default_rng() if rng is None else rng)
    else:
        raise ValueError(f"unknown init {init!r}")
    w = np.full(p, 1.0 / math.sqrt(p))
    res = None
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        res = variance_two_cluster(A, w, part, max_sweeps)
        part = res.partition
        w_new = update_weights(res.b, s)
        change = np.abs(w_new - w).sum() / np.abs(w).sum()
        w = w_new
        if change < cfg.tol:
            converged = True
            break
    return VarClusterResult(part, w, res.b, float(np.dot(w, res.b)), res.sweeps, it, converged)


def best_variance_cluster(X, cfg: SparseKmeansConfig = SparseKmeansConfig(),
                          rng: Optional[np.random.Generator] = None,
                          random_starts: int = 5) -> VarClusterResult:
    """Variance-ranking start plus ``random_starts`` random ones; best objective wins.

    The exchange step is a local search and a variance-ranking start can
    lock several high-variance blocks into one cluster; ties keep the
    earlier start.
    """
    rng = np.random.default_rng() if rng is None else rng
    best = sparse_variance_cluster(X, cfg, rng, init="variance")
    for _ in range(random_starts):
        cand = sparse_variance_cluster(X, cfg, rng, init="random")
        if cand.objective > best.objective + 1e-12 * max(1.0, abs(best.objective)):
            best = cand
    return best


def fit_variance_primary(X, cfg: BiclustConfig = BiclustConfig(null_method="chisq"),
                         rng: Optional[np.random.Generator] = None) -> Optional[Bicluster]:
    """One variance bicluster, tested against the simulated chi-square null.

    The KS distance between the fitted weights and the pooled null weights
    is referred to its Monte Carlo distribution over the null replicates.
    """
    A = _as_array(X)
    rng = np.random.default_rng() if rng is None else rng
    res = best_variance_cluster(A, cfg.km, rng, cfg.variance_starts)
    part = res.partition
    null = chisq_variance_null_order_stats(part.n1, part.n2, A.shape[1], cfg.null_replicates,
                                           rng, standardized=cfg.exact_variance_null)
    ks = ks_monte_carlo(res.weights, null, cfg.alpha)
    return _test_and_cut(A, part, res.weights, null, ks, "variance",
                         {"objective": res.objective})


def residualize_variance(X, U: Bicluster) -> DataMatrix:
    """Rescale the bicluster's entries by ``sd_outside / sd_inside`` per column.

    Scaling is about zero; standard deviations use the group size as divisor.
    """
    A = np.array(_as_array(X), dtype=float)
    inside = np.zeros(A.shape[0], dtype=bool)
    inside[U.rows] = True
    cols = U.cols
    sd_in = A[inside][:, cols].std(axis=0)
    sd_out = A[~inside][:, cols].std(axis=0)
    bad = np.flatnonzero(~(sd_in > 0))
    if bad.size:
        raise ZeroVariance(int(cols[bad[0]]))
    A[np.ix_(inside, cols)] *= sd_out / sd_in
    return DataMatrix(A)


def fit_variance_sequence(X, cfg: BiclustConfig = BiclustConfig(null_method="chisq"),
                          rng: Optional[np.random.Generator] = None) -> LayerSequence:
    rng = np.random.default_rng() if rng is None else rng
    return run_layers(X, lambda A: fit_variance_primary(A, cfg, rng), residualize_variance,
                      cfg.max_layers)
