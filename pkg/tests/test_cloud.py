import numpy as np
import pytest

from tripnorm.cloud import (
    NoiseSpec,
    PointCloud,
    add_gaussian_noise,
    bbox_diagonal,
    load_cloud,
    save_cloud,
)
from tripnorm.errors import MalformedFileError, TripnormError
from tripnorm.shapes import generate_shape


def test_bbox_diagonal_of_unit_cube_corners():
    pts = np.array([[0, 0, 0], [1, 1, 1], [0.5, 0.2, 0.9]], dtype=float)
    assert bbox_diagonal(PointCloud(pts)) == pytest.approx(np.sqrt(3), abs=1e-15)


def test_rejects_bad_shapes_and_nonfinite():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        PointCloud(np.array([[0, 0, np.nan]]))
    with pytest.raises(ValueError):
        PointCloud(np.zeros((3, 3)), normals=np.zeros((2, 3)))


def test_duplicates_are_kept():
    cloud = PointCloud(np.zeros((4, 3)))
    assert len(cloud) == 4


@pytest.mark.parametrize("fmt,ext", [("xyz", "xyz"), ("xyzn", "xyzn"), ("ply-ascii", "ply")])
def test_round_trip_is_lossless(tmp_path, fmt, ext):
    cloud = generate_shape("sphere", 300, seed=1)
    path = tmp_path / f"c.{ext}"
    save_cloud(cloud, path)
    back = load_cloud(path)
    assert np.array_equal(back.points, cloud.points)
    if fmt == "xyz":
        assert back.normals is None
    else:
        assert np.array_equal(back.normals, cloud.normals)


def test_ply_without_normals(tmp_path):
    cloud = PointCloud(np.random.default_rng(0).normal(size=(20, 3)))
    save_cloud(cloud, tmp_path / "a.ply")
    back = load_cloud(tmp_path / "a.ply")
    assert back.normals is None and np.array_equal(back.points, cloud.points)


def test_comments_and_blank_lines_skipped(tmp_path):
    path = tmp_path / "a.xyz"
    path.write_text("# header\n0 0 0\n\n1 2 3\n# trailing\n")
    assert load_cloud(path).points.tolist() == [[0, 0, 0], [1, 2, 3]]


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "bad.xyz"
    path.write_text("0 0 0\n1 2\n")
    with pytest.raises(MalformedFileError) as err:
        load_cloud(path)
    assert err.value.line == 2


def test_non_numeric_token(tmp_path):
    path = tmp_path / "bad.xyzn"
    path.write_text("0 0 0 0 0 1\n0 0 x 0 0 1\n")
    with pytest.raises(MalformedFileError) as err:
        load_cloud(path)
    assert err.value.line == 2


def test_zero_normal_is_rejected(tmp_path):
    path = tmp_path / "z.xyzn"
    path.write_text("0 0 0 0 0 0\n")
    with pytest.raises(MalformedFileError):
        load_cloud(path)


def test_xyzn_output_requires_normals(tmp_path):
    with pytest.raises(TripnormError):
        save_cloud(PointCloud(np.zeros((2, 3))), tmp_path / "x.xyzn")


def test_noise_zero_is_identity_copy():
    cloud = generate_shape("cube", 200, seed=0)
    out = add_gaussian_noise(cloud, NoiseSpec(0.0, 1))
    assert np.array_equal(out.points, cloud.points)
    assert out.points is not cloud.points


def test_noise_scale_matches_diagonal():
    cloud = generate_shape("sphere", 20000, seed=0)
    out = add_gaussian_noise(cloud, NoiseSpec(0.01, 5))
    sigma = 0.01 * bbox_diagonal(cloud)
    delta = out.points - cloud.points
    assert np.std(delta) == pytest.approx(sigma, rel=0.02)
    assert np.array_equal(out.normals, cloud.normals)


def test_noise_is_seeded():
    cloud = generate_shape("plane", 200, seed=0)
    a = add_gaussian_noise(cloud, NoiseSpec(0.01, 9)).points
    b = add_gaussian_noise(cloud, NoiseSpec(0.01, 9)).points
    c = add_gaussian_noise(cloud, NoiseSpec(0.01, 10)).points
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_negative_noise_rejected():
    with pytest.raises(ValueError):
        NoiseSpec(-0.1, 0)
