"""Local patch extraction, normalisation, PCA alignment and resampling."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._seeding import derive_rng
from .cloud import PointCloud, bbox_diagonal
from .errors import CorruptFileError, DegeneratePatchError
from .spatial import SpatialIndex

EIG_TOL = 1e-12


@dataclass(frozen=True)
class PatchConfig:
    k: int = 500
    r_fraction: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.k < 3:
            raise ValueError(f"k must be >= 3, got {self.k}")
        if not 0 < self.r_fraction < 1:
            raise ValueError(f"r_fraction must be in (0, 1), got {self.r_fraction}")

    def radius(self, cloud: PointCloud) -> float:
        return self.r_fraction * bbox_diagonal(cloud)


@dataclass(frozen=True, eq=False)
class RawPatch:
    center_index: int
    indices: np.ndarray  # source-cloud indices, ascending
    points: np.ndarray  # original coordinates, (m, 3)
    center: np.ndarray
    radius: float


@dataclass(frozen=True, eq=False)
class AlignedPatch:
    """A network-ready patch: ``k`` normalised rows in the PCA frame.

    ``indices`` maps every row back to the source cloud (padding duplicates
    repeat an index). ``rotation`` is the matrix that was applied; its
    transpose maps frame vectors back to cloud space.
    """

    points: np.ndarray
    rotation: np.ndarray
    center_index: int
    radius: float
    source_name: str
    indices: np.ndarray


def extract_patch(index: SpatialIndex, cloud: PointCloud, center_index: int,
                  radius: float) -> RawPatch:
    """Gather every point strictly inside the ball around ``center_index``."""
    if not 0 <= center_index < len(cloud):
        raise IndexError(f"center_index {center_index} out of range for {len(cloud)} points")
    if not radius > 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    center = cloud.points[center_index]
    members = index.ball_query(center, radius)
    if len(members) < 3:
        raise DegeneratePatchError(
            f"patch at {center_index} has {len(members)} point(s) within r={radius:.6g}; need 3"
        )
    return RawPatch(int(center_index), members, cloud.points[members], center.copy(), float(radius))


def center_and_scale(patch: RawPatch) -> np.ndarray:
    return (patch.points - patch.center) / patch.radius


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    return -v if v[np.argmax(np.abs(v))] < 0 else v


def pca_rotation(points: np.ndarray) -> np.ndarray:
    """Rotation taking the least-variance axis to z and the middle one to x.

    Each of the two leading axes is sign-fixed so its largest-magnitude
    component is positive; the z row is their cross product, so
    ``det(R) = +1`` by construction.
    """
    points = np.asarray(points, dtype=np.float64)
    if len(points) < 3:
        raise DegeneratePatchError(f"need at least 3 points for PCA, got {len(points)}")
    centered = points - points.mean(axis=0)
    cov = centered.T @ centered / len(points)
    evals, evecs = np.linalg.eigh(cov)
    if evals[0] < EIG_TOL and evals[1] < EIG_TOL:
        raise DegeneratePatchError("patch points are collinear (rank-1 covariance)")
    x_axis = _canonical_sign(evecs[:, 1])
    y_axis = _canonical_sign(evecs[:, 2])
    z_axis = np.cross(x_axis, y_axis)
    return np.vstack([x_axis, y_axis, z_axis])


def resample_indices(m: int, k: int, rng: np.random.Generator, keep: int | None = None) -> np.ndarray:
    """Row selection that turns ``m`` rows into exactly ``k``.

    Subsampling draws without replacement and, when ``keep`` is given, always
    retains that row. Padding keeps every row once and appends uniform
    duplicates.
    """
    if m < 1:
        raise ValueError("cannot resample an empty point set")
    if m == k:
        return np.arange(m)
    if m > k:
        if keep is None:
            return np.sort(rng.choice(m, size=k, replace=False))
        others = np.delete(np.arange(m), keep)
        picked = rng.choice(others, size=k - 1, replace=False)
        return np.sort(np.append(picked, keep))
    return np.concatenate([np.arange(m), rng.integers(0, m, size=k - m)])


def resample_to_k(points: np.ndarray, k: int, seed=0, keep: int | None = None) -> np.ndarray:
    points = np.asarray(points)
    rows = resample_indices(len(points), k, np.random.default_rng(seed), keep)
    return points[rows]


def _patch_rng(config: PatchConfig, center: np.ndarray, tag: str = "patch"):
    # keyed on the centre coordinates so reordering the cloud reorders outputs exactly
    return derive_rng(config.seed, tag, np.ascontiguousarray(center, dtype="<f8").tobytes())


def _canonical_order(raw: RawPatch) -> np.ndarray:
    p = raw.points
    return np.lexsort((raw.indices, p[:, 2], p[:, 1], p[:, 0]))


def frame_patch(raw: RawPatch, rotation: np.ndarray, k: int, rng: np.random.Generator,
                source_name: str = "") -> AlignedPatch:
    """Normalise ``raw``, rotate it by ``rotation`` and resample to ``k`` rows."""
    order = _canonical_order(raw)
    indices = raw.indices[order]
    local = center_and_scale(raw)[order]
    keep = int(np.flatnonzero(indices == raw.center_index)[0])
    rows = resample_indices(len(local), k, rng, keep=keep)
    rotated = local[rows] @ rotation.T
    return AlignedPatch(rotated, rotation, raw.center_index, raw.radius, source_name, indices[rows])


def preprocess_patch(index: SpatialIndex, cloud: PointCloud, center_index: int,
                     config: PatchConfig, radius: float | None = None) -> AlignedPatch:
    """Extract, normalise, PCA-align and resample the patch at ``center_index``.

    ``radius`` defaults to ``config.r_fraction`` times the cloud's bounding-box
    diagonal; batch callers pass it in to avoid recomputing the diagonal.
    """
    if radius is None:
        radius = config.radius(cloud)
    raw = extract_patch(index, cloud, center_index, radius)
    order = _canonical_order(raw)
    rotation = pca_rotation(center_and_scale(raw)[order])
    rng = _patch_rng(config, raw.center)
    return frame_patch(raw, rotation, config.k, rng, cloud.name)


# ---------------------------------------------------------------------------
# binary cache
# ---------------------------------------------------------------------------

PATCH_MAGIC = b"TNPATCH1"


def _write_patch(fh, patch: AlignedPatch):
    name = patch.source_name.encode("utf-8")
    fh.write(struct.pack("<H", len(name)))
    fh.write(name)
    fh.write(struct.pack("<qd", patch.center_index, patch.radius))
    fh.write(np.ascontiguousarray(patch.rotation, dtype="<f8").tobytes())
    fh.write(np.ascontiguousarray(patch.indices, dtype="<i8").tobytes())
    fh.write(np.ascontiguousarray(patch.points, dtype="<f8").tobytes())


def _read_exact(fh, n):
    buf = fh.read(n)
    if len(buf) != n:
        raise CorruptFileError(f"unexpected end of file (wanted {n} bytes, got {len(buf)})")
    return buf


def _read_patch(fh, k: int) -> AlignedPatch:
    (nlen,) = struct.unpack("<H", _read_exact(fh, 2))
    name = _read_exact(fh, nlen).decode("utf-8")
    center_index, radius = struct.unpack("<qd", _read_exact(fh, 16))
    rotation = np.frombuffer(_read_exact(fh, 72), dtype="<f8").reshape(3, 3).astype(np.float64)
    indices = np.frombuffer(_read_exact(fh, 8 * k), dtype="<i8").astype(np.int64)
    points = np.frombuffer(_read_exact(fh, 24 * k), dtype="<f8").reshape(k, 3).astype(np.float64)
    return AlignedPatch(points, rotation, center_index, radius, name, indices)


def _write_header(fh, magic, count, k):
    fh.write(magic)
    fh.write(struct.pack("<QQ", count, k))


def _read_header(fh, magic):
    if _read_exact(fh, 8) != magic:
        raise CorruptFileError(f"bad magic; expected {magic!r}")
    return struct.unpack("<QQ", _read_exact(fh, 16))


def write_patches(path, patches: list[AlignedPatch]) -> None:
    k = len(patches[0].points) if patches else 0
    with open(Path(path), "wb") as fh:
        _write_header(fh, PATCH_MAGIC, len(patches), k)
        for p in patches:
            if len(p.points) != k:
                raise ValueError("all cached patches must share k")
            _write_patch(fh, p)


def read_patches(path) -> list[AlignedPatch]:
    with open(Path(path), "rb") as fh:
        count, k = _read_header(fh, PATCH_MAGIC)
        patches = [_read_patch(fh, k) for _ in range(count)]
        if fh.read(1):
            raise CorruptFileError("trailing bytes after last patch")
    return patches
