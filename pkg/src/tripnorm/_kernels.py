"""Hot numeric kernels.

Each kernel has a numba implementation and a pure-numpy fallback with the
same signature. The active backend is chosen once at import time: numba is
used when it imports cleanly and ``TRIPNORM_DISABLE_NUMBA`` is unset (or
``0``). Both implementations stay importable so tests and the benchmark can
compare them directly.
"""

import os

import numpy as np

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep in practice
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def _numba_requested():
    flag = os.environ.get("TRIPNORM_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


USE_NUMBA = HAVE_NUMBA and _numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# uniform-grid ball query
# ---------------------------------------------------------------------------


def _cell_range(center, radius, origin, cell_size, dims):
    # pad so rounding at cell borders can never drop a qualifying point
    reach = radius * (1.0 + 1e-9) + 1e-9 * cell_size
    lo = np.floor((center - reach - origin) / cell_size).astype(np.int64)
    hi = np.floor((center + reach - origin) / cell_size).astype(np.int64)
    lo = np.clip(lo, 0, dims - 1)
    hi = np.clip(hi, 0, dims - 1)
    return lo, hi


@njit(cache=True)
def _ball_query_numba_impl(points, order, cell_start, lo, hi, dims, center, radius):
    cx, cy, cz = center[0], center[1], center[2]
    count = 0
    for pass_ in range(2):
        if pass_ == 1:
            out = np.empty(count, dtype=np.int64)
            count = 0
        for i in range(lo[0], hi[0] + 1):
            for j in range(lo[1], hi[1] + 1):
                base = (i * dims[1] + j) * dims[2]
                for c in range(base + lo[2], base + hi[2] + 1):
                    for s in range(cell_start[c], cell_start[c + 1]):
                        p = order[s]
                        dx = points[p, 0] - cx
                        dy = points[p, 1] - cy
                        dz = points[p, 2] - cz
                        if np.sqrt(dx * dx + dy * dy + dz * dz) < radius:
                            if pass_ == 1:
                                out[count] = p
                            count += 1
    out.sort()
    return out


def ball_query_numba(points, order, cell_start, origin, cell_size, dims, center, radius):
    lo, hi = _cell_range(center, radius, origin, cell_size, dims)
    return _ball_query_numba_impl(
        points, order, cell_start, lo, hi, dims, np.asarray(center, dtype=np.float64),
        float(radius),
    )


def ball_query_numpy(points, order, cell_start, origin, cell_size, dims, center, radius):
    lo, hi = _cell_range(center, radius, origin, cell_size, dims)
    ii, jj, kk = np.meshgrid(
        np.arange(lo[0], hi[0] + 1),
        np.arange(lo[1], hi[1] + 1),
        np.arange(lo[2], hi[2] + 1),
        indexing="ij",
    )
    cells = ((ii * dims[1] + jj) * dims[2] + kk).ravel()
    starts = cell_start[cells]
    counts = cell_start[cells + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    # concatenated aranges over [start, start + count)
    offsets = np.repeat(starts - np.cumsum(counts) + counts, counts)
    slots = offsets + np.arange(total)
    cand = order[slots]
    d = points[cand] - center
    dist = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])
    return np.sort(cand[dist < radius])


# ---------------------------------------------------------------------------
# max-pool backward for the last shared layer
# ---------------------------------------------------------------------------


@njit(cache=True)
def _maxpool_backward_numba_impl(grad, argmax, active, hidden, weight):
    B, C = grad.shape
    k = hidden.shape[1]
    D = hidden.shape[2]
    dW = np.zeros((C, D))
    db = np.zeros(C)
    dH = np.zeros((B, k, D))
    for b in range(B):
        for c in range(C):
            if not active[b, c]:
                continue
            g = grad[b, c]
            if g == 0.0:
                continue
            r = argmax[b, c]
            db[c] += g
            for d in range(D):
                dW[c, d] += g * hidden[b, r, d]
                dH[b, r, d] += g * weight[c, d]
    return dW, db, dH


def maxpool_backward_numba(grad, argmax, active, hidden, weight):
    return _maxpool_backward_numba_impl(
        np.ascontiguousarray(grad), np.ascontiguousarray(argmax),
        np.ascontiguousarray(active), np.ascontiguousarray(hidden),
        np.ascontiguousarray(weight),
    )


def maxpool_backward_numpy(grad, argmax, active, hidden, weight):
    """Dense reference: scatter into a (B, k, C) pre-activation gradient."""
    B, C = grad.shape
    k = hidden.shape[1]
    dz = np.zeros((B, k, C))
    bi = np.repeat(np.arange(B), C)
    ci = np.tile(np.arange(C), B)
    dz[bi, argmax.ravel(), ci] = (grad * active).ravel()
    dW = np.tensordot(dz, hidden, axes=([0, 1], [0, 1]))
    db = dz.sum(axis=(0, 1))
    dH = dz @ weight
    return dW, db, dH


# ---------------------------------------------------------------------------
# batched 3x3 covariance over gathered neighborhoods
# ---------------------------------------------------------------------------


@njit(cache=True)
def _neighborhood_covariance_numba_impl(points, neighbors):
    n, k = neighbors.shape
    out = np.zeros((n, 3, 3))
    for i in range(n):
        mx = 0.0
        my = 0.0
        mz = 0.0
        for t in range(k):
            p = neighbors[i, t]
            mx += points[p, 0]
            my += points[p, 1]
            mz += points[p, 2]
        mx /= k
        my /= k
        mz /= k
        for t in range(k):
            p = neighbors[i, t]
            dx = points[p, 0] - mx
            dy = points[p, 1] - my
            dz = points[p, 2] - mz
            out[i, 0, 0] += dx * dx
            out[i, 0, 1] += dx * dy
            out[i, 0, 2] += dx * dz
            out[i, 1, 1] += dy * dy
            out[i, 1, 2] += dy * dz
            out[i, 2, 2] += dz * dz
        for a in range(3):
            for b in range(a, 3):
                out[i, a, b] /= k
                out[i, b, a] = out[i, a, b]
    return out


def neighborhood_covariance_numba(points, neighbors):
    return _neighborhood_covariance_numba_impl(
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(neighbors, dtype=np.int64),
    )


def neighborhood_covariance_numpy(points, neighbors):
    nb = points[neighbors]
    centered = nb - nb.mean(axis=1, keepdims=True)
    return np.einsum("nki,nkj->nij", centered, centered) / neighbors.shape[1]


if USE_NUMBA:
    ball_query_kernel = ball_query_numba
    maxpool_backward = maxpool_backward_numba
    neighborhood_covariance = neighborhood_covariance_numba
else:
    ball_query_kernel = ball_query_numpy
    maxpool_backward = maxpool_backward_numpy
    neighborhood_covariance = neighborhood_covariance_numpy
