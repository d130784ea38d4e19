"""Triplet hinge loss and the weighted cosine-power normal loss, with gradients."""

from __future__ import annotations

import numpy as np

DEFAULT_SUPPORT_ANGLE = 15.0
DEFAULT_EXPONENT = 8


def triplet_loss(f_anchor, f_pos, f_neg, margin: float = 0.0):
    """Hinge on the anchor-positive vs anchor-negative embedding distances.

    Works on single vectors or on ``(B, d)`` batches (one loss per row).
    Returns ``(loss, (g_anchor, g_pos, g_neg))``. Inside the clamped region,
    at the hinge itself, and for a zero-length difference the gradient is 0.
    """
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    fa = np.asarray(f_anchor, dtype=np.float64)
    fp = np.asarray(f_pos, dtype=np.float64)
    fn = np.asarray(f_neg, dtype=np.float64)
    if not fa.shape == fp.shape == fn.shape:
        raise ValueError(f"embedding shapes differ: {fa.shape}, {fp.shape}, {fn.shape}")
    dp = fa - fp
    dn = fa - fn
    np_ = np.linalg.norm(dp, axis=-1, keepdims=True)
    nn_ = np.linalg.norm(dn, axis=-1, keepdims=True)
    arg = np_ - nn_ + margin
    loss = np.maximum(arg, 0.0)[..., 0]
    live = arg > 0
    up = np.divide(dp, np_, out=np.zeros_like(dp), where=np_ > 0) * live
    un = np.divide(dn, nn_, out=np.zeros_like(dn), where=nn_ > 0) * live
    grads = (up - un, -up, un)
    if fa.ndim == 1:
        return float(loss), grads
    return loss, grads


def weight_fn(n_i, n_j, sigma: float = DEFAULT_SUPPORT_ANGLE):
    """``exp(-(1 - n_i . n_j) / (1 - cos sigma))`` with ``sigma`` in degrees."""
    if not 0 < sigma < 90:
        raise ValueError(f"support angle must be in (0, 90) degrees, got {sigma}")
    dot = np.sum(np.asarray(n_i, dtype=np.float64) * np.asarray(n_j, dtype=np.float64), axis=-1)
    return np.exp(-(1.0 - dot) / (1.0 - np.cos(np.radians(sigma))))


def _check_exponent(exponent):
    if int(exponent) != exponent or exponent <= 0 or exponent % 2:
        raise ValueError(f"exponent must be an even positive integer, got {exponent}")
    return int(exponent)


def normal_loss(pred, patch_normals, center_normal, sigma: float = DEFAULT_SUPPORT_ANGLE,
                exponent: int = DEFAULT_EXPONENT):
    """Weighted ``1 - (pred . n_j)^e`` averaged over the patch's ground truth.

    ``pred`` is ``(3,)`` or ``(B, 3)``; ``patch_normals`` is ``(k, 3)`` or
    ``(B, k, 3)``; ``center_normal`` matches ``pred``. Each neighbour is
    weighted by :func:`weight_fn` against the centre's ground truth. Returns
    ``(loss, d_loss / d_pred)``, treating ``pred`` as an unconstrained vector.
    """
    e = _check_exponent(exponent)
    pred = np.asarray(pred, dtype=np.float64)
    nbrs = np.asarray(patch_normals, dtype=np.float64)
    center = np.asarray(center_normal, dtype=np.float64)
    single = pred.ndim == 1
    if single:
        pred, nbrs, center = pred[None], nbrs[None], center[None]
    if nbrs.shape[1] == 0:
        raise ValueError("normal loss needs at least one neighbour normal")
    w = weight_fn(center[:, None, :], nbrs, sigma)  # (B, k)
    wsum = w.sum(axis=1)
    c = np.einsum("bkd,bd->bk", nbrs, pred)
    # powers of c*c keep the loss exactly invariant to the sign of pred
    half = (c * c) ** (e // 2 - 1)
    loss = np.sum((1.0 - half * (c * c)) * w, axis=1) / wsum
    grad = -e * np.einsum("bk,bkd->bd", half * c * w, nbrs) / wsum[:, None]
    if single:
        return float(loss[0]), grad[0]
    return loss, grad


def normal_loss_exponent_variant(pred, patch_normals, center_normal, exponent: int,
                                 sigma: float = DEFAULT_SUPPORT_ANGLE):
    return normal_loss(pred, patch_normals, center_normal, sigma, _check_exponent(exponent))
