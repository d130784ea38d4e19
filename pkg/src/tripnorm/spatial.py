"""Uniform-grid spatial index with exact ball and k-nearest-neighbour queries."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .cloud import PointCloud


class SpatialIndex:
    """Immutable bucket grid over a cloud's points.

    Points are sorted by cell id; ``cell_start[c]:cell_start[c + 1]`` slices
    ``order`` to give the members of cell ``c``. The grid is sized for surface
    samples (about ``n^(1/2)`` cells across the diagonal) and capped at
    ``8 n`` cells so outliers cannot blow up memory.
    """

    def __init__(self, points: np.ndarray):
        points = np.ascontiguousarray(points, dtype=np.float64)
        n = len(points)
        lo = points.min(axis=0)
        extent = points.max(axis=0) - lo
        diag = float(np.sqrt(extent @ extent))
        cell = 2.0 * diag / np.sqrt(n) if diag > 0 else 1.0
        cap = 8 * n + 64
        while True:
            dims = (np.floor(extent / cell).astype(np.int64) + 1)
            if int(np.prod(dims)) <= cap:
                break
            cell *= 1.5
        coords = np.minimum(np.floor((points - lo) / cell).astype(np.int64), dims - 1)
        ids = (coords[:, 0] * dims[1] + coords[:, 1]) * dims[2] + coords[:, 2]
        order = np.argsort(ids, kind="stable")
        counts = np.bincount(ids, minlength=int(np.prod(dims)))
        cell_start = np.zeros(len(counts) + 1, dtype=np.int64)
        np.cumsum(counts, out=cell_start[1:])

        self.points = points
        self.points.setflags(write=False)
        self.order = order.astype(np.int64)
        self.cell_start = cell_start
        self.origin = lo
        self.cell_size = float(cell)
        self.dims = dims
        self._far = lo, lo + extent

    def __len__(self):
        return len(self.points)

    def ball_query(self, center, radius: float) -> np.ndarray:
        """Indices with ``|p - center| < radius``, ascending."""
        if not radius > 0:
            raise ValueError(f"radius must be > 0, got {radius}")
        center = np.asarray(center, dtype=np.float64).reshape(3)
        return _kernels.ball_query_kernel(
            self.points, self.order, self.cell_start, self.origin, self.cell_size,
            self.dims, center, float(radius),
        )

    def knn_query(self, center, k: int) -> np.ndarray:
        """The ``k`` nearest indices, ordered by distance then index."""
        n = len(self.points)
        if not 1 <= k <= n:
            raise ValueError(f"k must be in [1, {n}], got {k}")
        center = np.asarray(center, dtype=np.float64).reshape(3)
        lo, hi = self._far
        corner = np.maximum(np.abs(center - lo), np.abs(center - hi))
        reach = float(np.sqrt(corner @ corner)) * 1.01 + 1e-12
        radius = min(self.cell_size * max(1.0, np.sqrt(k)), reach)
        while True:
            cand = self.ball_query(center, radius)
            if len(cand) >= k or radius >= reach:
                break
            radius = min(radius * 2.0, reach)
        if len(cand) < k:
            # center is so far out that floating rounding defeats the reach bound
            cand = np.arange(n)
        d = self.points[cand] - center
        dist = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])
        pick = np.lexsort((cand, dist))[:k]
        return cand[pick]


def build_index(cloud: PointCloud | np.ndarray) -> SpatialIndex:
    points = cloud.points if isinstance(cloud, PointCloud) else cloud
    return SpatialIndex(points)


def ball_query(index: SpatialIndex, center, radius: float) -> np.ndarray:
    return index.ball_query(center, radius)


def knn_query(index: SpatialIndex, center, k: int) -> np.ndarray:
    return index.knn_query(center, k)
