"""Point cloud container, text I/O and Gaussian corruption."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import MalformedFileError, TripnormError

FORMATS = ("xyz", "xyzn", "ply-ascii")
UNIT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered 3D points with optional per-point unit normals.

    ``points`` is an ``(n, 3)`` float64 array; ``normals`` is either ``None``
    or an array of the same shape.
    """

    points: np.ndarray
    normals: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 1:
            raise ValueError(f"points must be a non-empty (n, 3) array, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", pts)
        if self.normals is not None:
            nrm = np.ascontiguousarray(self.normals, dtype=np.float64)
            if nrm.shape != pts.shape:
                raise ValueError(f"normals shape {nrm.shape} != points shape {pts.shape}")
            object.__setattr__(self, "normals", nrm)

    def __len__(self):
        return len(self.points)

    @property
    def has_normals(self) -> bool:
        return self.normals is not None

    def with_name(self, name: str) -> "PointCloud":
        return replace(self, name=name)


def bbox_diagonal(cloud: PointCloud) -> float:
    extent = cloud.points.max(axis=0) - cloud.points.min(axis=0)
    return float(np.sqrt(extent @ extent))


@dataclass(frozen=True)
class NoiseSpec:
    level: float
    seed: int = 0

    def __post_init__(self):
        if not self.level >= 0:
            raise ValueError(f"noise level must be >= 0, got {self.level}")


def add_gaussian_noise(cloud: PointCloud, spec: NoiseSpec) -> PointCloud:
    """Return a copy with i.i.d. per-coordinate Gaussian displacement.

    The standard deviation is ``spec.level`` times the bounding-box diagonal of
    the clean input. Normals are carried over untouched as ground truth.
    """
    if spec.level < 0:
        raise ValueError(f"noise level must be >= 0, got {spec.level}")
    normals = None if cloud.normals is None else cloud.normals.copy()
    if spec.level == 0:
        return PointCloud(cloud.points.copy(), normals, cloud.name)
    sigma = spec.level * bbox_diagonal(cloud)
    rng = np.random.default_rng(spec.seed)
    noisy = cloud.points + rng.normal(0.0, sigma, size=cloud.points.shape)
    return PointCloud(noisy, normals, cloud.name)


# ---------------------------------------------------------------------------
# text formats
# ---------------------------------------------------------------------------


def _infer_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".ply":
        return "ply-ascii"
    if suffix in (".xyzn", ".xyz"):
        return suffix[1:]
    raise TripnormError(f"cannot infer point cloud format from {path.name!r}")


def _parse_rows(lines, path, ncols, first_lineno):
    rows = []
    for lineno, line in enumerate(lines, start=first_lineno):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        fields = text.split()
        if len(fields) != ncols:
            raise MalformedFileError(path, lineno, f"expected {ncols} fields, got {len(fields)}")
        try:
            rows.append([float(v) for v in fields])
        except ValueError as exc:
            raise MalformedFileError(path, lineno, str(exc)) from None
    return rows


def _check_normals(normals, path, linenos=None):
    norms = np.linalg.norm(normals, axis=1)
    bad = np.flatnonzero(norms == 0)
    if len(bad):
        line = linenos[bad[0]] if linenos is not None else bad[0] + 1
        raise MalformedFileError(path, line, "normal has zero length")


def _load_xyz(path: Path, fmt: str) -> PointCloud:
    ncols = 3 if fmt == "xyz" else 6
    with open(path) as fh:
        lines = fh.readlines()
    data = np.array(_parse_rows(lines, path, ncols, 1), dtype=np.float64).reshape(-1, ncols)
    if len(data) == 0:
        raise MalformedFileError(path, len(lines), "no points in file")
    linenos = [i for i, line in enumerate(lines, start=1)
               if line.strip() and not line.strip().startswith("#")]
    finite = np.isfinite(data).all(axis=1)
    if not finite.all():
        raise MalformedFileError(path, linenos[int(np.argmin(finite))], "non-finite value")
    normals = None
    if fmt == "xyzn":
        normals = data[:, 3:]
        _check_normals(normals, path, linenos)
    return PointCloud(data[:, :3], normals, path.stem)


def _load_ply(path: Path) -> PointCloud:
    with open(path) as fh:
        lines = fh.readlines()
    if not lines or lines[0].strip() != "ply":
        raise MalformedFileError(path, 1, "missing 'ply' magic")
    n_vertex = None
    props: list[str] = []
    in_vertex = False
    header_end = None
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        key = parts[0]
        if key == "format":
            if len(parts) < 2 or parts[1] != "ascii":
                raise MalformedFileError(path, lineno, "only ascii PLY is supported")
        elif key == "element":
            if len(parts) != 3:
                raise MalformedFileError(path, lineno, "bad element line")
            in_vertex = parts[1] == "vertex"
            if not in_vertex and n_vertex is None:
                raise MalformedFileError(path, lineno, "vertex must be the first element")
            if in_vertex:
                if n_vertex is not None:
                    raise MalformedFileError(path, lineno, "duplicate vertex element")
                n_vertex = int(parts[2])
        elif key == "property":
            if in_vertex:
                if parts[1] == "list":
                    raise MalformedFileError(path, lineno, "list properties on vertex unsupported")
                props.append(parts[-1])
        elif key == "end_header":
            header_end = lineno
            break
        elif key in ("comment", "obj_info"):
            continue
        else:
            raise MalformedFileError(path, lineno, f"unexpected header keyword {key!r}")
    if header_end is None or n_vertex is None:
        raise MalformedFileError(path, len(lines), "incomplete PLY header")
    for axis in ("x", "y", "z"):
        if axis not in props:
            raise MalformedFileError(path, header_end, f"vertex lacks property {axis!r}")
    has_normals = all(a in props for a in ("nx", "ny", "nz"))
    body = lines[header_end:header_end + n_vertex]
    if len(body) < n_vertex:
        raise MalformedFileError(path, len(lines), f"expected {n_vertex} vertices, got {len(body)}")
    rows = _parse_rows(body, path, len(props), header_end + 1)
    if len(rows) != n_vertex:
        raise MalformedFileError(path, header_end + n_vertex, "vertex count mismatch")
    data = np.array(rows, dtype=np.float64)
    col = {p: i for i, p in enumerate(props)}
    pts = data[:, [col["x"], col["y"], col["z"]]]
    normals = None
    if has_normals:
        normals = data[:, [col["nx"], col["ny"], col["nz"]]]
        _check_normals(normals, path, list(range(header_end + 1, header_end + 1 + n_vertex)))
    return PointCloud(pts, normals, path.stem)


def load_cloud(path, format: Optional[str] = None) -> PointCloud:
    """Read a cloud from ``xyz``, ``xyzn`` or ASCII PLY text.

    Normals are populated only for formats that carry them. Malformed input
    raises :class:`MalformedFileError` naming the offending line.
    """
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt not in FORMATS:
        raise TripnormError(f"unknown format {fmt!r}")
    if fmt == "ply-ascii":
        return _load_ply(path)
    return _load_xyz(path, fmt)


def save_cloud(cloud: PointCloud, path, format: Optional[str] = None) -> None:
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt not in FORMATS:
        raise TripnormError(f"unknown format {fmt!r}")
    if fmt == "xyzn" and cloud.normals is None:
        raise TripnormError("xyzn output requires normals")
    with_normals = fmt == "xyzn" or (fmt == "ply-ascii" and cloud.normals is not None)
    data = np.hstack([cloud.points, cloud.normals]) if with_normals else cloud.points
    with open(path, "w") as fh:
        if fmt == "ply-ascii":
            fh.write("ply\nformat ascii 1.0\n")
            fh.write(f"element vertex {len(cloud)}\n")
            names = ["x", "y", "z"] + (["nx", "ny", "nz"] if with_normals else [])
            for name in names:
                fh.write(f"property double {name}\n")
            fh.write("end_header\n")
        np.savetxt(fh, data, fmt="%.17g")
