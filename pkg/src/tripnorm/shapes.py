"""Analytic synthetic shapes with exact outward normals.

All shapes are centred at the origin with unit-scale extents:

* ``cube``: the axis-aligned cube ``[-1, 1]^3``
* ``tetrahedron``: regular, vertices at alternating corners of that cube
* ``cylinder``: radius 1, height 2 along z, with both caps
* ``sphere``: the unit sphere
* ``plane``: the square ``[-1, 1]^2`` at ``z = 0`` with normal ``+z``

Points are drawn uniformly with respect to surface area. Face counts are
allocated with a multinomial draw so the total is exactly ``n``.
"""

import numpy as np

from .cloud import PointCloud

SHAPES = ("cube", "tetrahedron", "cylinder", "sphere", "plane")
CAD_SHAPES = ("cube", "tetrahedron", "cylinder")

_TET_VERTS = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=np.float64)


def _cube(n, rng):
    face = rng.integers(0, 6, size=n)
    axis = face // 2
    sign = np.where(face % 2 == 0, 1.0, -1.0)
    pts = rng.uniform(-1.0, 1.0, size=(n, 3))
    rows = np.arange(n)
    pts[rows, axis] = sign
    normals = np.zeros((n, 3))
    normals[rows, axis] = sign
    return pts, normals


def _sample_triangles(tris, normals, n, rng):
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    counts = rng.multinomial(n, areas / areas.sum())
    which = np.repeat(np.arange(len(tris)), counts)
    u = rng.random(n)
    v = rng.random(n)
    su = np.sqrt(u)
    w0 = 1.0 - su
    w1 = su * (1.0 - v)
    w2 = su * v
    pts = w0[:, None] * a[which] + w1[:, None] * b[which] + w2[:, None] * c[which]
    return pts, normals[which].copy()


def _tetrahedron(n, rng):
    tris = []
    normals = []
    for skip in range(4):
        face = np.delete(_TET_VERTS, skip, axis=0)
        nrm = -_TET_VERTS[skip] / np.linalg.norm(_TET_VERTS[skip])
        tris.append(face)
        normals.append(nrm)
    return _sample_triangles(np.array(tris), np.array(normals), n, rng)


def _cylinder(n, rng):
    side, cap = 4.0 * np.pi, np.pi
    top, bottom, lateral = rng.multinomial(n, np.array([cap, cap, side]) / (side + 2 * cap))
    theta = rng.uniform(0.0, 2 * np.pi, size=lateral)
    z = rng.uniform(-1.0, 1.0, size=lateral)
    lat_pts = np.column_stack([np.cos(theta), np.sin(theta), z])
    lat_nrm = np.column_stack([np.cos(theta), np.sin(theta), np.zeros(lateral)])

    def disk(m, height):
        r = np.sqrt(rng.random(m))
        phi = rng.uniform(0.0, 2 * np.pi, size=m)
        pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), np.full(m, height)])
        nrm = np.zeros((m, 3))
        nrm[:, 2] = np.sign(height)
        return pts, nrm

    tp, tn = disk(top, 1.0)
    bp, bn = disk(bottom, -1.0)
    return np.vstack([tp, bp, lat_pts]), np.vstack([tn, bn, lat_nrm])


def _sphere(n, rng):
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v, v.copy()


def _plane(n, rng):
    pts = np.column_stack([rng.uniform(-1.0, 1.0, size=(n, 2)), np.zeros(n)])
    normals = np.zeros((n, 3))
    normals[:, 2] = 1.0
    return pts, normals


_GENERATORS = {
    "cube": _cube,
    "tetrahedron": _tetrahedron,
    "cylinder": _cylinder,
    "sphere": _sphere,
    "plane": _plane,
}


def generate_shape(kind: str, n: int, seed: int = 0, name: str = "") -> PointCloud:
    """Sample ``n`` surface points of an analytic shape with exact normals."""
    if kind not in _GENERATORS:
        raise ValueError(f"unknown shape kind {kind!r}; expected one of {SHAPES}")
    if n < 100:
        raise ValueError(f"n must be >= 100, got {n}")
    rng = np.random.default_rng(seed)
    pts, normals = _GENERATORS[kind](int(n), rng)
    # shuffle so face blocks are not contiguous
    perm = rng.permutation(len(pts))
    return PointCloud(pts[perm], normals[perm], name or f"{kind}-s{seed}")
