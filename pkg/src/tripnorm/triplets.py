"""Anchor / positive / negative patch mining on clouds with ground-truth normals."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ._seeding import derive_rng
from .cloud import UNIT_TOL, PointCloud
from .errors import CorruptFileError, DegeneratePatchError, TripnormError
from .patches import (
    AlignedPatch,
    PatchConfig,
    _patch_rng,
    _read_exact,
    _read_header,
    _read_patch,
    _write_header,
    _write_patch,
    extract_patch,
    frame_patch,
    preprocess_patch,
)
from .spatial import SpatialIndex, build_index

log = logging.getLogger(__name__)

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class TripletConfig:
    theta_th: float = 20.0
    search_growth: float = 1.5
    max_search_factor: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.theta_th < 90:
            raise ValueError(f"theta_th must be in (0, 90), got {self.theta_th}")
        if not self.search_growth > 1:
            raise ValueError(f"search_growth must be > 1, got {self.search_growth}")
        if not self.max_search_factor >= 1:
            raise ValueError(f"max_search_factor must be >= 1, got {self.max_search_factor}")


@dataclass(frozen=True, eq=False)
class Triplet:
    anchor: AlignedPatch
    positive: AlignedPatch
    negative: AlignedPatch
    anchor_gt_normal: np.ndarray


@dataclass(frozen=True)
class SamplingReport:
    attempted: int
    succeeded: int

    @property
    def skipped(self) -> int:
        return self.attempted - self.succeeded


def unoriented_angle(a, b) -> float:
    """Angle in degrees between two unit normals, ignoring orientation."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    for v in (a, b):
        if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise ValueError(f"expected a unit vector, got norm {np.linalg.norm(v):.9g}")
    return float(np.degrees(np.arccos(np.clip(abs(a @ b), 0.0, 1.0))))


def _angles_to(normals: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return np.degrees(np.arccos(np.clip(np.abs(normals @ ref), 0.0, 1.0)))


def _search_radii(radius, config: TripletConfig):
    cap = radius * config.max_search_factor
    rho = radius
    while rho < cap:
        yield rho
        rho *= config.search_growth
    yield cap


def find_companion(index: SpatialIndex, cloud: PointCloud, anchor_index: int, kind: str,
                   radius: float, config: TripletConfig) -> Optional[int]:
    """Closest point whose normal passes the positive/negative angle test.

    The ball around the anchor starts at ``radius`` and grows by
    ``search_growth`` up to ``max_search_factor * radius``. Returns ``None``
    when nothing qualifies inside the cap.
    """
    if cloud.normals is None:
        raise TripnormError("companion search needs ground-truth normals")
    if kind not in (POSITIVE, NEGATIVE):
        raise ValueError(f"kind must be 'positive' or 'negative', got {kind!r}")
    anchor = cloud.points[anchor_index]
    ref = cloud.normals[anchor_index]
    for rho in _search_radii(radius, config):
        cand = index.ball_query(anchor, rho)
        cand = cand[cand != anchor_index]
        if len(cand) == 0:
            continue
        ang = _angles_to(cloud.normals[cand], ref)
        ok = ang <= config.theta_th if kind == POSITIVE else ang > config.theta_th
        cand = cand[ok]
        if len(cand):
            d = cloud.points[cand] - anchor
            dist = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])
            return int(cand[np.lexsort((cand, dist))[0]])
    return None


def build_triplet(index: SpatialIndex, cloud: PointCloud, anchor_index: int,
                  patch_config: PatchConfig, triplet_config: TripletConfig,
                  radius: float | None = None) -> Optional[Triplet]:
    """Assemble one triplet, or ``None`` when a companion or patch is unusable.

    The anchor's PCA rotation is reused for the positive and negative patches.
    """
    if cloud.normals is None:
        raise TripnormError("triplet construction needs ground-truth normals")
    if radius is None:
        radius = patch_config.radius(cloud)
    try:
        anchor = preprocess_patch(index, cloud, anchor_index, patch_config, radius)
    except DegeneratePatchError:
        return None
    companions = []
    for kind in (POSITIVE, NEGATIVE):
        found = find_companion(index, cloud, anchor_index, kind, radius, triplet_config)
        if found is None:
            return None
        try:
            raw = extract_patch(index, cloud, found, radius)
        except DegeneratePatchError:
            return None
        rng = _patch_rng(patch_config, raw.center, kind)
        companions.append(frame_patch(raw, anchor.rotation, patch_config.k, rng, cloud.name))
    return Triplet(anchor, companions[0], companions[1], cloud.normals[anchor_index].copy())


def sample_triplets(cloud: PointCloud, count: int, patch_config: PatchConfig,
                    triplet_config: TripletConfig, index: SpatialIndex | None = None):
    """Mine up to ``count`` triplets from uniformly drawn anchors.

    Returns ``(triplets, report)``. Failed anchors are skipped, not redrawn.
    """
    if cloud.normals is None:
        raise TripnormError("triplet sampling needs ground-truth normals")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    index = index or build_index(cloud)
    radius = patch_config.radius(cloud)
    rng = derive_rng(triplet_config.seed, "anchors", cloud.name)
    n = len(cloud)
    anchors = rng.choice(n, size=count, replace=count > n)
    triplets = []
    for a in anchors:
        t = build_triplet(index, cloud, int(a), patch_config, triplet_config, radius)
        if t is not None:
            triplets.append(t)
    report = SamplingReport(len(anchors), len(triplets))
    log.info("%s: %d/%d triplets", cloud.name, report.succeeded, report.attempted)
    if not triplets:
        warnings.warn(f"no triplets could be mined from {cloud.name!r}", RuntimeWarning,
                      stacklevel=2)
    return triplets, report


TRIPLET_MAGIC = b"TNTRIP01"


def write_triplets(path, triplets: list[Triplet]) -> None:
    k = len(triplets[0].anchor.points) if triplets else 0
    with open(Path(path), "wb") as fh:
        _write_header(fh, TRIPLET_MAGIC, len(triplets), k)
        for t in triplets:
            fh.write(np.ascontiguousarray(t.anchor_gt_normal, dtype="<f8").tobytes())
            for p in (t.anchor, t.positive, t.negative):
                _write_patch(fh, p)


def read_triplets(path) -> list[Triplet]:
    out = []
    with open(Path(path), "rb") as fh:
        count, k = _read_header(fh, TRIPLET_MAGIC)
        for _ in range(count):
            gt = np.frombuffer(_read_exact(fh, 24), dtype="<f8").astype(np.float64)
            a, p, n = (_read_patch(fh, k) for _ in range(3))
            out.append(Triplet(a, p, n, gt))
        if fh.read(1):
            raise CorruptFileError("trailing bytes after last triplet")
    return out
