import numpy as np
import pytest

from tripnorm.cloud import NoiseSpec, PointCloud, add_gaussian_noise
from tripnorm.errors import CorruptFileError, TripnormError
from tripnorm.patches import PatchConfig
from tripnorm.shapes import generate_shape
from tripnorm.spatial import build_index
from tripnorm.triplets import (
    TripletConfig,
    find_companion,
    read_triplets,
    sample_triplets,
    unoriented_angle,
    write_triplets,
)

PCFG = PatchConfig(k=24, seed=1)
TCFG = TripletConfig(seed=1)


def brute_companion(cloud, anchor, kind, radius, cfg):
    ang = np.degrees(np.arccos(np.clip(np.abs(cloud.normals @ cloud.normals[anchor]), 0, 1)))
    ok = ang <= cfg.theta_th if kind == "positive" else ang > cfg.theta_th
    ok[anchor] = False
    d = np.sqrt(np.sum((cloud.points - cloud.points[anchor]) ** 2, axis=1))
    ok &= d < radius * cfg.max_search_factor
    if not ok.any():
        return None
    cand = np.flatnonzero(ok)
    return int(cand[np.lexsort((cand, d[cand]))[0]])


def test_unoriented_angle():
    z = np.array([0, 0, 1.0])
    assert unoriented_angle(z, -z) == 0.0
    assert unoriented_angle(z, [1.0, 0, 0]) == pytest.approx(90.0)
    with pytest.raises(ValueError):
        unoriented_angle(z, [0, 0, 2.0])


def test_companions_match_brute_force(small_cube):
    idx = build_index(small_cube)
    r = PCFG.radius(small_cube)
    for a in range(0, 2000, 41):
        for kind in ("positive", "negative"):
            assert find_companion(idx, small_cube, a, kind, r, TCFG) == \
                brute_companion(small_cube, a, kind, r, TCFG)


def test_sampled_triplets_respect_angles(small_cube):
    trips, report = sample_triplets(small_cube, 60, PCFG, TCFG)
    assert report.attempted == 60 and report.succeeded == len(trips) > 0
    for t in trips:
        n = small_cube.normals
        assert unoriented_angle(n[t.anchor.center_index], n[t.positive.center_index]) <= 20
        assert unoriented_angle(n[t.anchor.center_index], n[t.negative.center_index]) > 20
        assert np.array_equal(t.positive.rotation, t.anchor.rotation)
        assert np.array_equal(t.negative.rotation, t.anchor.rotation)
        assert t.anchor.points.shape == (24, 3)


def test_plane_yields_no_triplets_with_warning():
    plane = generate_shape("plane", 500, seed=0)
    with pytest.warns(RuntimeWarning):
        trips, report = sample_triplets(plane, 20, PCFG, TCFG)
    assert trips == [] and report.skipped == 20


def test_needs_normals():
    with pytest.raises(TripnormError):
        sample_triplets(PointCloud(np.random.default_rng(0).normal(size=(50, 3))), 5, PCFG, TCFG)


def test_deterministic(small_cube):
    a, _ = sample_triplets(small_cube, 20, PCFG, TCFG)
    b, _ = sample_triplets(small_cube, 20, PCFG, TCFG)
    assert [t.anchor.center_index for t in a] == [t.anchor.center_index for t in b]
    assert all(np.array_equal(x.negative.points, y.negative.points) for x, y in zip(a, b))


def test_cache_round_trip(tmp_path, small_cube):
    trips, _ = sample_triplets(small_cube, 10, PCFG, TCFG)
    write_triplets(tmp_path / "t.bin", trips)
    back = read_triplets(tmp_path / "t.bin")
    assert len(back) == len(trips)
    for x, y in zip(trips, back):
        assert np.array_equal(x.anchor_gt_normal, y.anchor_gt_normal)
        for p, q in ((x.anchor, y.anchor), (x.positive, y.positive), (x.negative, y.negative)):
            assert np.array_equal(p.points, q.points) and np.array_equal(p.indices, q.indices)
    raw = (tmp_path / "t.bin").read_bytes()
    (tmp_path / "x.bin").write_bytes(raw + b"\0")
    with pytest.raises(CorruptFileError):
        read_triplets(tmp_path / "x.bin")


def test_noisy_cloud_uses_clean_labels(small_cube):
    noisy = add_gaussian_noise(small_cube, NoiseSpec(0.005, 3))
    trips, _ = sample_triplets(noisy, 30, PCFG, TCFG)
    for t in trips:
        n = small_cube.normals
        assert unoriented_angle(n[t.anchor.center_index], n[t.negative.center_index]) > 20


def test_config_validation():
    for kw in ({"theta_th": 0}, {"search_growth": 1.0}, {"max_search_factor": 0.5}):
        with pytest.raises(ValueError):
            TripletConfig(**kw)
