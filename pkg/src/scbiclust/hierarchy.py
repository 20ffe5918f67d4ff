"""Single-linkage clustering and its top-level two-way cut.

Single linkage is built from a minimum spanning tree (Prim's algorithm
with distances computed row by row), so memory stays O(n).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Partition, _as_array

__all__ = ["Dendrogram", "minimum_spanning_tree", "single_linkage", "cut_two"]


@dataclass(frozen=True)
class Dendrogram:
    """Merge records in scipy ``linkage`` numbering.

    ``merges[k] = (left, right, height, size)``; leaves are ``0..n-1`` and
    the cluster created by merge ``k`` has id ``n + k``.
    """

    merges: np.ndarray
    n: int

    @property
    def heights(self) -> np.ndarray:
        return self.merges[:, 2]


def minimum_spanning_tree(X, w=None):
    """Prim's MST under weighted squared Euclidean distance.

    Returns ``(u, v, d)`` arrays for the ``n - 1`` tree edges in the order
    Prim adds them.
    """
    A = _as_array(X)
    n, p = A.shape
    Y = A if w is None else A * np.sqrt(np.asarray(w, dtype=float))
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1)
    us, vs, ds = [], [], []
    cur = 0
    in_tree[0] = True
    for _ in range(n - 1):
        d = ((Y - Y[cur]) ** 2).sum(axis=1)
        closer = (d < best) & ~in_tree
        best[closer] = d[closer]
        parent[closer] = cur
        cand = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(cand))
        us.append(int(parent[nxt]))
        vs.append(nxt)
        ds.append(float(best[nxt]))
        in_tree[nxt] = True
        cur = nxt
    return np.array(us, dtype=int), np.array(vs, dtype=int), np.array(ds)


def single_linkage(X, w=None) -> Dendrogram:
    """Agglomerative single linkage on ``sum_j w_j (x_ij - x_i'j)^2``.

    Merges follow the MST edges in ascending length; equal lengths keep
    Prim's order.
    """
    A = _as_array(X)
    n = A.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")
    u, v, d = minimum_spanning_tree(A, w)
    order = np.argsort(d, kind="stable")
    root = np.arange(n)
    cluster_id = np.arange(n)
    size = np.ones(n, dtype=int)

    def find(i):
        while root[i] != i:
            root[i] = root[root[i]]
            i = root[i]
        return i

    merges = np.empty((n - 1, 4))
    for k, e in enumerate(order):
        a, b = find(u[e]), find(v[e])
        ia, ib = cluster_id[a], cluster_id[b]
        merges[k] = (min(ia, ib), max(ia, ib), d[e], size[a] + size[b])
        root[b] = a
        size[a] += size[b]
        cluster_id[a] = n + k
    return Dendrogram(merges, n)


def cut_two(dend: Dendrogram) -> Partition:
    """Undo the final merge; its two children become clusters 1 and 2.

    Cluster 1 is the child holding observation 0.  A singleton side is
    returned as is.
    """
    n = dend.n
    side = np.zeros(n, dtype=bool)
    stack = [int(dend.merges[-1, 0])]
    while stack:
        c = stack.pop()
        if c < n:
            side[c] = True
        else:
            stack.extend((int(dend.merges[c - n, 0]), int(dend.merges[c - n, 1])))
    return Partition.from_mask(side == side[0])
