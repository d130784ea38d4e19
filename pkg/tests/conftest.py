import numpy as np
import pytest

from tripnorm.cloud import PointCloud
from tripnorm.shapes import generate_shape


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_cube():
    return generate_shape("cube", 2000, seed=3)


@pytest.fixture(scope="session")
def small_sphere():
    return generate_shape("sphere", 2000, seed=4)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def grid_plane(m=30, spacing=0.1):
    xs, ys = np.meshgrid(np.arange(m) * spacing, np.arange(m) * spacing)
    pts = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(m * m)])
    normals = np.tile([0.0, 0.0, 1.0], (len(pts), 1))
    return PointCloud(pts, normals, "grid")


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
