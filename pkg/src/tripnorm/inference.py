"""Whole-cloud normal estimation, the PCA baseline and the MSAE metric."""

from __future__ import annotations

import logging

import numpy as np

from . import _kernels
from .cloud import PointCloud
from .errors import DegeneratePatchError
from .nn import EncoderNet, EstimatorNet
from .patches import PatchConfig, preprocess_patch
from .spatial import build_index

log = logging.getLogger(__name__)

FALLBACK_NORMAL = np.array([0.0, 0.0, 1.0])
MAX_MSAE = (np.pi / 2) ** 2


def msae(pred, gt) -> float:
    """Mean squared unoriented angular error in radians squared."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {gt.shape}")
    cos = np.clip(np.abs(np.sum(pred * gt, axis=-1)), 0.0, 1.0)
    return float(np.mean(np.arccos(cos) ** 2))


def pca_baseline_normals(cloud: PointCloud, k_neighbors: int = 20, index=None, subset=None):
    """Smallest-eigenvector normals of each point's k-nearest neighbourhood.

    Normals are flipped to point away from the cloud centroid. Returns
    ``(normals, flags)`` where ``flags`` marks collinear neighbourhoods that
    fell back to ``(0, 0, 1)``. With ``subset`` only those points are
    evaluated and the outputs have ``len(subset)`` rows.
    """
    if k_neighbors < 3:
        raise ValueError(f"k_neighbors must be >= 3, got {k_neighbors}")
    which = np.arange(len(cloud)) if subset is None else np.asarray(subset, dtype=np.int64)
    k = min(k_neighbors, len(cloud))
    index = index or build_index(cloud)
    neighbors = np.empty((len(which), k), dtype=np.int64)
    for row, i in enumerate(which):
        neighbors[row] = index.knn_query(cloud.points[i], k)
    cov = _kernels.neighborhood_covariance(cloud.points, neighbors)
    evals, evecs = np.linalg.eigh(cov)
    normals = evecs[:, :, 0].copy()
    scale = np.maximum(evals[:, 2], np.finfo(float).tiny)
    flags = evals[:, 1] <= 1e-12 * scale
    normals[flags] = FALLBACK_NORMAL
    outward = cloud.points[which] - cloud.points.mean(axis=0)
    flip = (np.sum(normals * outward, axis=1) < 0) & ~flags
    normals[flip] *= -1.0
    return normals, flags


def estimate_normals(cloud: PointCloud, encoder: EncoderNet, estimator: EstimatorNet,
                     patch_config: PatchConfig, batch_size: int = 256,
                     fallback_k: int = 20):
    """Network normals for every point, mapped back through each patch rotation.

    Points whose patch cannot be aligned get the PCA-baseline normal instead.
    Returns ``(normals, fallback_flags)``.
    """
    n = len(cloud)
    index = build_index(cloud)
    radius = patch_config.radius(cloud)
    normals = np.empty((n, 3))
    fallback = np.zeros(n, dtype=bool)
    buf_idx, buf_pts, buf_rot = [], [], []

    def flush():
        if not buf_idx:
            return
        latent, _ = encoder.forward(np.stack(buf_pts))
        pred, _ = estimator.forward(latent)
        # R^-1 = R^T for each patch
        back = np.einsum("bji,bj->bi", np.stack(buf_rot), pred)
        back /= np.linalg.norm(back, axis=1, keepdims=True)
        normals[buf_idx] = back
        buf_idx.clear()
        buf_pts.clear()
        buf_rot.clear()

    for i in range(n):
        try:
            patch = preprocess_patch(index, cloud, i, patch_config, radius)
        except DegeneratePatchError:
            fallback[i] = True
            continue
        buf_idx.append(i)
        buf_pts.append(patch.points)
        buf_rot.append(patch.rotation)
        if len(buf_idx) >= batch_size:
            flush()
    flush()
    if fallback.any():
        normals[fallback], _ = pca_baseline_normals(cloud, fallback_k, index,
                                                     np.flatnonzero(fallback))
        log.info("%s: %d degenerate patches fell back to PCA", cloud.name, int(fallback.sum()))
    return normals, fallback
