import numpy as np
import pytest

from tripnorm.cloud import PointCloud
from tripnorm.inference import MAX_MSAE, estimate_normals, msae, pca_baseline_normals
from tripnorm.nn import EncoderNet, EstimatorNet
from tripnorm.patches import PatchConfig, preprocess_patch
from tripnorm.shapes import generate_shape
from tripnorm.spatial import build_index


def unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_msae_conventions(rng):
    gt = unit(rng, 50)
    # a dot product rounded just below 1 leaves ~1e-16 after arccos squared
    assert msae(gt, gt) == pytest.approx(0.0, abs=1e-14)
    assert msae(-gt, gt) == pytest.approx(0.0, abs=1e-14)
    ortho = np.cross(gt, unit(rng, 50))
    ortho /= np.linalg.norm(ortho, axis=1, keepdims=True)
    assert msae(ortho, gt) == pytest.approx((np.pi / 2) ** 2, abs=1e-12)
    assert MAX_MSAE == pytest.approx(2.4674, abs=1e-4)


def test_msae_symmetry_and_bounds(rng):
    a, b = unit(rng, 100), unit(rng, 100)
    signs = rng.choice([-1.0, 1.0], size=(100, 1))
    assert msae(a, b) == msae(b, a) == pytest.approx(msae(a * signs, b))
    assert 0 <= msae(a, b) <= MAX_MSAE
    with pytest.raises(ValueError):
        msae(a[:3], b[:4])


def test_msae_against_explicit_loop(rng):
    a, b = unit(rng, 20), unit(rng, 20)
    expected = np.mean([np.arccos(min(1.0, abs(float(x @ y)))) ** 2 for x, y in zip(a, b)])
    assert msae(a, b) == pytest.approx(expected, rel=1e-14)


def test_pca_plane_is_exact():
    plane = generate_shape("plane", 1000, seed=3)
    for k in (3, 10, 30):
        normals, flags = pca_baseline_normals(plane, k)
        assert not flags.any()
        assert np.all(np.abs(normals) == [0, 0, 1])


def test_pca_sphere_accuracy():
    sphere = generate_shape("sphere", 10000, seed=0)
    normals, _ = pca_baseline_normals(sphere, 20)
    ang = np.degrees(np.arccos(np.clip(np.abs(np.sum(normals * sphere.normals, axis=1)), 0, 1)))
    assert np.mean(ang < 2.0) >= 0.99


def test_pca_orientation_away_from_centroid():
    sphere = generate_shape("sphere", 2000, seed=1)
    normals, _ = pca_baseline_normals(sphere, 12)
    assert np.all(np.sum(normals * sphere.points, axis=1) > 0)


def test_pca_collinear_fallback():
    line = PointCloud(np.column_stack([np.arange(3.0), np.zeros(3), np.zeros(3)]))
    normals, flags = pca_baseline_normals(line, 3)
    assert flags.all() and np.all(normals == [0, 0, 1])
    with pytest.raises(ValueError):
        pca_baseline_normals(line, 2)


def test_pca_subset_matches_full(small_sphere):
    full, _ = pca_baseline_normals(small_sphere, 10)
    sub, _ = pca_baseline_normals(small_sphere, 10, subset=[5, 17, 400])
    assert np.array_equal(sub, full[[5, 17, 400]])


def test_inverse_rotation_round_trip(small_cube, rng):
    idx = build_index(small_cube)
    for i in rng.choice(len(small_cube), 20, replace=False):
        R = preprocess_patch(idx, small_cube, int(i), PatchConfig(k=16)).rotation
        v = unit(rng, 1)[0]
        np.testing.assert_allclose(R.T @ (R @ v), v, atol=1e-12)


@pytest.fixture(scope="module")
def nets():
    return EncoderNet.create(1), EstimatorNet.create(2)


def test_estimate_normals_unit_and_count(nets):
    cloud = generate_shape("sphere", 400, seed=2)
    normals, flags = estimate_normals(cloud, *nets, PatchConfig(k=16, r_fraction=0.1))
    assert normals.shape == (400, 3) and not flags.any()
    assert np.allclose(np.linalg.norm(normals, axis=1), 1, atol=1e-6)


def test_estimate_normals_permutation_equivariant(nets, rng):
    cloud = generate_shape("cube", 500, seed=4)
    cfg = PatchConfig(k=16, r_fraction=0.1, seed=3)
    base, _ = estimate_normals(cloud, *nets, cfg, batch_size=64)
    perm = rng.permutation(500)
    moved = PointCloud(cloud.points[perm], cloud.normals[perm])
    out, _ = estimate_normals(moved, *nets, cfg, batch_size=64)
    np.testing.assert_allclose(out, base[perm], rtol=0, atol=1e-12)


def test_degenerate_patches_fall_back(nets):
    pts = np.vstack([generate_shape("plane", 300, seed=0).points, [[50.0, 50.0, 0.3]]])
    cloud = PointCloud(pts)
    normals, flags = estimate_normals(cloud, *nets, PatchConfig(k=16, r_fraction=0.02))
    assert flags[-1] and flags.sum() == 1
    expected, _ = pca_baseline_normals(cloud, 20, subset=[300])
    assert np.array_equal(normals[-1], expected[0])
