import math

import numpy as np
import pytest
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist

from scbiclust.core import Partition, rng_stream
from scbiclust.hierarchy import cut_two, minimum_spanning_tree, single_linkage
from scbiclust.sparse_kmeans import weighted_two_means


def _naive_single_linkage_heights(X):
    """O(n^3) agglomeration straight from the definition."""
    clusters = [[i] for i in range(len(X))]
    D = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
    heights = []
    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                d = D[np.ix_(clusters[a], clusters[b])].min()
                if best is None or d < best[0]:
                    best = (d, a, b)
        d, a, b = best
        heights.append(d)
        clusters[a] = clusters[a] + clusters[b]
        del clusters[b]
    return np.array(heights)


def test_three_collinear_points():
    d = single_linkage(np.array([[0.0], [1.0], [10.0]]))
    assert list(d.merges[0, :2]) == [0, 1] and d.merges[0, 2] == 1
    assert d.merges[1, 2] == 81 and d.merges[1, 3] == 3
    part = cut_two(d)
    assert part.same_as(Partition(np.array([1, 1, 2])))


def test_duplicate_points_zero_height():
    d = single_linkage(np.array([[1.0, 2], [3, 4], [1, 2]]))
    assert d.heights[0] == 0


def test_equidistant_chain_deterministic_cut():
    X = np.arange(5, dtype=float)[:, None]
    parts = [cut_two(single_linkage(X)) for _ in range(3)]
    assert all(p.same_as(parts[0]) for p in parts)
    # all edges tie, so the last MST edge (3, 4) is the final merge
    assert parts[0].same_as(Partition(np.array([1, 1, 1, 1, 2])))


@pytest.mark.parametrize("seed", range(5))
def test_heights_match_naive_and_scipy(seed):
    rng = rng_stream(30, seed)
    n = int(rng.integers(5, 50))
    X = rng.normal(size=(n, 3))
    d = single_linkage(X)
    assert np.all(np.diff(d.heights) >= 0)
    assert np.allclose(d.heights, _naive_single_linkage_heights(X))
    ref = linkage(pdist(X, "sqeuclidean"), method="single")
    assert np.allclose(d.heights, ref[:, 2])
    assert np.array_equal(d.merges[:, 3], ref[:, 3])


def test_heights_equal_sorted_mst_edges():
    X = rng_stream(31).normal(size=(40, 4))
    w = np.array([0.1, 0.5, 0.2, 0.2])
    _, _, dist = minimum_spanning_tree(X, w)
    assert np.allclose(single_linkage(X, w).heights, np.sort(dist))


def test_squared_and_plain_euclidean_same_merge_order():
    X = rng_stream(32).normal(size=(30, 2))
    ours = single_linkage(X)
    ref = linkage(pdist(X, "euclidean"), method="single")
    assert np.allclose(ours.heights, ref[:, 2] ** 2)


def test_merge_tree_is_valid():
    X = rng_stream(33).normal(size=(25, 2))
    d = single_linkage(X)
    used = set()
    for k, (a, b, _, size) in enumerate(d.merges):
        a, b = int(a), int(b)
        assert a not in used and b not in used and a < 25 + k and b < 25 + k
        used |= {a, b}
    assert d.merges[-1, 3] == 25


def test_cut_invariant_under_row_permutation():
    rng = rng_stream(34)
    X = np.vstack([rng.normal(0, 1, (10, 2)), rng.normal(8, 1, (7, 2))])
    perm = rng.permutation(17)
    a = cut_two(single_linkage(X))
    b = cut_two(single_linkage(X[perm]))
    assert Partition(a.labels[perm]).same_as(b)


def _moons(rng, n=60):
    n1 = round(n * 500 / 1200)
    theta = rng.uniform(0, math.pi, n)
    eps = rng.normal(0, 0.2, n)
    first = np.arange(n) < n1
    phase = theta + math.pi * (~first)
    X = np.column_stack([5.0 * first + 5 * np.cos(phase) + eps,
                         -2.0 * first + 5 * np.sin(phase) + eps])
    return X, Partition(np.where(first, 1, 2))


def test_moons_single_linkage_beats_two_means():
    # Separation rate of the true single-linkage cut on this geometry is about
    # 0.82 (2000 draws); gaps inside the smaller moon sometimes exceed the
    # gap between moons.  The cut itself must agree with scipy every time.
    sl = km = 0
    for seed in range(100):
        rng = rng_stream(35, seed)
        X, truth = _moons(rng)
        part = cut_two(single_linkage(X))
        ref = fcluster(linkage(pdist(X, "sqeuclidean"), method="single"), 2, "maxclust")
        assert part.same_as(Partition(ref))
        sl += part.same_as(truth)
        km += weighted_two_means(X, np.full(2, 0.5 ** 0.5), rng).same_as(truth)
    assert sl >= 75 and km <= 10
