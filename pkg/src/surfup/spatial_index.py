"""k-nearest-neighbor queries and farthest point sampling.

Queries are backed by a kd-tree (scipy's cKDTree) but the results are
contractually identical to a brute-force scan, with ties broken by smaller
point index. Candidate distances are always recomputed in plain numpy and
re-sorted so the tie-break holds exactly even for duplicate points.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyCloud, KTooLarge, MTooLarge
from .geom_core import PointCloud

# extra neighbors fetched per query so boundary ties can be detected cheaply
_TIE_SLACK = 8


class KnnIndex:
    """Immutable spatial index over a point cloud; concurrent queries are safe."""

    def __init__(self, cloud: PointCloud):
        if len(cloud) == 0:
            raise EmptyCloud("cannot index an empty cloud")
        self.points = cloud.points
        self.n = len(cloud)
        self._tree = cKDTree(self.points)

    def knn_many(self, queries, k: int):
        """k nearest neighbors for each query row.

        Returns (indices, distances), each (Q, k), rows sorted ascending by
        distance with ties broken by smaller point index.
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if not 1 <= k <= self.n:
            raise KTooLarge(f"k={k} out of range for {self.n} points")
        kk = min(k + _TIE_SLACK, self.n)
        _, idx = self._tree.query(queries, k=kk)
        idx = np.asarray(idx)
        if idx.ndim == 1:  # kk == 1
            idx = idx[:, None]
        diff = self.points[idx] - queries[:, None, :]
        d2 = np.einsum("qkc,qkc->qk", diff, diff)
        order = np.lexsort((idx, d2), axis=-1)
        rows = np.arange(len(queries))[:, None]
        d2 = d2[rows, order]
        idx = idx[rows, order]
        if kk > k:
            # a point beyond the candidate set can only tie for the k-th slot
            # when the k-th and last candidate distances coincide
            unsafe = d2[:, k - 1] >= d2[:, kk - 1]
            for q in np.nonzero(unsafe)[0]:
                idx[q, :k], d2[q, :k] = self._knn_exact(queries[q], k)
        return idx[:, :k].copy(), np.sqrt(d2[:, :k])

    def _knn_exact(self, q, k):
        """Ball-query fallback used only when boundary ties are possible."""
        d_k = self._tree.query(q, k=k)[0]
        d_k = float(np.atleast_1d(d_k)[-1])
        cand = np.asarray(self._tree.query_ball_point(q, d_k * (1.0 + 1e-9) + 1e-300),
                          dtype=np.intp)
        diff = self.points[cand] - q
        d2 = np.einsum("kc,kc->k", diff, diff)
        order = np.lexsort((cand, d2))[:k]
        return cand[order], d2[order]


def build_index(cloud: PointCloud) -> KnnIndex:
    return KnnIndex(cloud)


def knn(index: KnnIndex, q, k: int):
    """Nearest k points to q: (indices, distances), ascending, index tie-break."""
    idx, d = index.knn_many(np.asarray(q, float).reshape(1, 3), k)
    return idx[0], d[0]


def farthest_point_sample(cloud: PointCloud, m: int, seed_index: int = 0) -> np.ndarray:
    """Greedy farthest point sampling starting from seed_index.

    Each pick maximizes the minimum distance to the already-selected set;
    exact ties resolve to the smaller point index. Deterministic.
    """
    pts = cloud.points
    n = len(pts)
    if not 1 <= m <= n:
        raise MTooLarge(f"m={m} out of range for {n} points")
    if not 0 <= seed_index < n:
        raise ValueError(f"seed_index {seed_index} out of range")
    selected = np.empty(m, dtype=np.intp)
    selected[0] = seed_index
    diff = pts - pts[seed_index]
    min_d2 = np.einsum("ij,ij->i", diff, diff)
    for i in range(1, m):
        nxt = int(np.argmax(min_d2))  # argmax returns the first (smallest) index on ties
        selected[i] = nxt
        diff = pts - pts[nxt]
        np.minimum(min_d2, np.einsum("ij,ij->i", diff, diff), out=min_d2)
    return selected
