"""Mean biclusters: sparse 2-means weights, KS test, feature cut, layering."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Bicluster, DataMatrix, Partition, _as_array, bcss, restandardize, top_features
from .hierarchy import cut_two, single_linkage
from .nulls import (
    NullOrderStats,
    beta_null_order_stats,
    ks_test_beta,
    ks_two_sample,
    permutation_null_order_stats,
)
from .sparse_kmeans import SparseKmeansConfig, sparse_two_means, update_weights

__all__ = [
    "BiclustConfig",
    "LayerSequence",
    "select_feature_count",
    "fit_primary",
    "residualize_mean",
    "fit_sequence",
]


@dataclass(frozen=True)
class BiclustConfig:
    base: str = "kmeans"
    null_method: str = "beta"
    alpha: float = 0.05
    max_layers: int = 10
    km: SparseKmeansConfig = field(default_factory=SparseKmeansConfig)
    null_replicates: int = 1000
    variance_starts: int = 5  # random restarts added to the variance-ranking start
    exact_variance_null: bool = True
    hier_weights: str = "sparse"  # "sparse": sparse 2-means weights; "equal": 1/sqrt(p)

    def __post_init__(self):
        if self.base not in ("kmeans", "hierarchical"):
            raise ValueError(f"unknown base clusterer {self.base!r}")
        if self.null_method not in ("beta", "permutation", "chisq"):
            raise ValueError(f"unknown null method {self.null_method!r}")
        if self.hier_weights not in ("sparse", "equal"):
            raise ValueError(f"unknown hierarchical weighting {self.hier_weights!r}")
        if self.max_layers < 1:
            raise ValueError("max_layers must be at least 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass
class LayerSequence:
    layers: list
    residual: DataMatrix
    stopped_reason: str


def select_feature_count(w_sorted, null_expected) -> int:
    """Size of the bicluster's feature set from the largest excess-weight drop.

    With ``e_k = w_(k) - w0_(k)`` (ascending order statistics), returns the
    ``m`` in ``1..p-1`` maximizing ``e_(p-m+1) - e_(p-m)``; ties go to the
    smallest ``m``.
    """
    w = np.asarray(w_sorted, dtype=float)
    w0 = np.asarray(null_expected, dtype=float)
    if w.shape != w0.shape:
        raise ValueError("weights and null order statistics differ in length")
    p = w.size
    if p < 2:
        raise ValueError("need at least two features")
    e = w - w0
    # gaps[m-1] = e[p-m] - e[p-m-1]  (0-based), m = 1..p-1
    gaps = (e[1:] - e[:-1])[::-1]
    return int(np.argmax(gaps)) + 1


def _sqrt_weights(b):
    return update_weights(np.sqrt(b), math.sqrt(b.size))


def _base_partition(A, cfg: BiclustConfig, rng):
    if cfg.base == "kmeans":
        res = sparse_two_means(A, cfg.km, rng)
        return res.partition, res.weights
    # Single linkage on all features lets pure-noise coordinates decide the
    # top merge (typically one outlier row), so by default the features are
    # first weighted by sparse 2-means.  The tree is built once either way.
    p = A.shape[1]
    if cfg.hier_weights == "sparse":
        w0 = sparse_two_means(A, cfg.km, rng).weights
    else:
        w0 = np.full(p, 1.0 / math.sqrt(p))
    part = cut_two(single_linkage(A, w0))
    return part, _sqrt_weights(bcss(A, part))


def _test_and_cut(A, part: Partition, w, null: NullOrderStats, ks, kind, extra=None) -> Optional[Bicluster]:
    if not ks.reject:
        return None
    m = select_feature_count(np.sort(w), null.expected)
    info = {"partition": part.labels.copy(), "null_method": null.method}
    if extra:
        info.update(extra)
    return Bicluster(
        rows=part.smaller(),
        cols=top_features(w, m),
        kind=kind,
        weights=np.asarray(w, dtype=float),
        ks_statistic=ks.statistic,
        ks_p_value=ks.p_value,
        m=m,
        extra=info,
    )


def fit_primary(X, cfg: BiclustConfig = BiclustConfig(),
                rng: Optional[np.random.Generator] = None) -> Optional[Bicluster]:
    """Find one mean bicluster, or ``None`` when the weights look like noise.

    ``X`` should already be standardized.
    """
    A = _as_array(X)
    rng = np.random.default_rng() if rng is None else rng
    part, w = _base_partition(A, cfg, rng)
    p = A.shape[1]
    if cfg.null_method == "permutation":
        null = permutation_null_order_stats(A, part, cfg.null_replicates, rng, cfg.km.weight_mode)
        ks = ks_two_sample(w, null.pooled, cfg.alpha)
    else:
        null = beta_null_order_stats(p, cfg.null_replicates, rng)
        ks = ks_test_beta(w, cfg.alpha)
    return _test_and_cut(A, part, w, null, ks, "mean")


def residualize_mean(X, U: Bicluster) -> DataMatrix:
    """Shift the bicluster's entries so each of its columns has the outside mean."""
    A = np.array(_as_array(X), dtype=float)
    inside = np.zeros(A.shape[0], dtype=bool)
    inside[U.rows] = True
    cols = U.cols
    shift = A[~inside][:, cols].mean(axis=0) - A[inside][:, cols].mean(axis=0)
    A[np.ix_(inside, cols)] += shift
    return DataMatrix(A)


def run_layers(X, fit: Callable, residualize: Callable, max_layers: int) -> LayerSequence:
    A = _as_array(X)
    layers = []
    for _ in range(max_layers):
        A = restandardize(A)
        U = fit(A)
        if U is None:
            return LayerSequence(layers, DataMatrix(A), "ks_accept")
        layers.append(U)
        A = _as_array(residualize(A, U)).copy()
    return LayerSequence(layers, DataMatrix(A), "max_layers")


def fit_sequence(X, cfg: BiclustConfig = BiclustConfig(),
                 rng: Optional[np.random.Generator] = None) -> LayerSequence:
    """Extract mean biclusters one after another until the KS test accepts.

    The working matrix is re-standardized before every layer.
    """
    rng = np.random.default_rng() if rng is None else rng
    return run_layers(X, lambda A: fit_primary(A, cfg, rng), residualize_mean, cfg.max_layers)
