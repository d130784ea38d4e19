import numpy as np
import pytest

from gradcheck import relative_error
from tripnorm.losses import normal_loss, normal_loss_exponent_variant, triplet_loss, weight_fn


def test_triplet_hinge_cases():
    a = np.array([0.0, 0.0])
    loss, _ = triplet_loss(a, np.array([1.0, 0.0]), np.array([3.0, 0.0]))
    assert loss == 0.0
    loss, (ga, gp, gn) = triplet_loss(a, np.array([3.0, 0.0]), np.array([1.0, 0.0]))
    assert loss == 2.0
    np.testing.assert_allclose(ga, [-1 + 1, 0])
    np.testing.assert_allclose(gp, [1, 0])
    np.testing.assert_allclose(gn, [-1, 0])
    loss, _ = triplet_loss(a, np.array([1.0, 0.0]), np.array([3.0, 0.0]), margin=2.5)
    assert loss == pytest.approx(0.5)


def test_triplet_kink_has_zero_gradient():
    a = np.zeros(3)
    loss, grads = triplet_loss(a, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert loss == 0.0
    assert all(np.all(g == 0) for g in grads)


def test_triplet_batched_matches_single(rng):
    fa, fp, fn = (rng.normal(size=(6, 5)) for _ in range(3))
    loss, grads = triplet_loss(fa, fp, fn, 0.3)
    for i in range(6):
        li, gi = triplet_loss(fa[i], fp[i], fn[i], 0.3)
        assert loss[i] == li
        for g, h in zip(grads, gi):
            np.testing.assert_array_equal(g[i], h)


def test_triplet_gradient_by_finite_differences(rng):
    h = 1e-6
    for _ in range(20):
        x = [rng.normal(size=4) for _ in range(3)]
        loss, grads = triplet_loss(*x, margin=0.5)
        if loss == 0:
            continue
        for which in range(3):
            for j in range(4):
                e = np.zeros(4)
                e[j] = h
                up = [v + e if i == which else v for i, v in enumerate(x)]
                dn = [v - e if i == which else v for i, v in enumerate(x)]
                fd = (triplet_loss(*up, margin=0.5)[0] - triplet_loss(*dn, margin=0.5)[0]) / (2 * h)
                assert abs(fd - grads[which][j]) < 1e-7


def test_triplet_rejects_bad_input():
    with pytest.raises(ValueError):
        triplet_loss(np.zeros(2), np.zeros(2), np.zeros(2), margin=-1)
    with pytest.raises(ValueError):
        triplet_loss(np.zeros(2), np.zeros(3), np.zeros(2))


def test_weight_function_values():
    z = np.array([0.0, 0.0, 1.0])
    assert weight_fn(z, z) == 1.0
    s = np.radians(15)
    tilted = np.array([np.sin(s), 0, np.cos(s)])
    assert weight_fn(z, tilted) == pytest.approx(np.exp(-1), abs=1e-15)
    assert weight_fn(z, tilted) == pytest.approx(0.367879, abs=5e-7)
    assert weight_fn(z, -z) == pytest.approx(np.exp(-2 / (1 - np.cos(s))))
    with pytest.raises(ValueError):
        weight_fn(z, z, sigma=0)


def test_normal_loss_extremes():
    nbrs = np.tile([0.0, 0.0, 1.0], (5, 1))
    assert normal_loss(np.array([0, 0, 1.0]), nbrs, nbrs[0])[0] == 0.0
    assert normal_loss(np.array([0, 0, -1.0]), nbrs, nbrs[0])[0] == 0.0
    assert normal_loss(np.array([1.0, 0, 0]), nbrs, nbrs[0])[0] == 1.0


def test_normal_loss_weights_follow_the_centre():
    z, x = np.array([0, 0, 1.0]), np.array([1.0, 0, 0])
    nbrs = np.array([z, z, x])
    loss, _ = normal_loss(z, nbrs, z)
    w = weight_fn(z, x)
    assert loss == pytest.approx(w / (2 + w), rel=1e-12)


def test_normal_loss_gradient_finite_differences(rng):
    h = 1e-6
    for e in (2, 4, 8):
        for _ in range(10):
            pred = rng.normal(size=3)
            nbrs = rng.normal(size=(7, 3))
            nbrs /= np.linalg.norm(nbrs, axis=1, keepdims=True)
            _, g = normal_loss(pred, nbrs, nbrs[0], exponent=e)
            for j in range(3):
                d = np.zeros(3)
                d[j] = h
                fd = (normal_loss(pred + d, nbrs, nbrs[0], exponent=e)[0]
                      - normal_loss(pred - d, nbrs, nbrs[0], exponent=e)[0]) / (2 * h)
                assert relative_error(fd, g[j]) < 1e-6 or abs(fd - g[j]) < 1e-9


def test_normal_loss_batched(rng):
    pred = rng.normal(size=(4, 3))
    pred /= np.linalg.norm(pred, axis=1, keepdims=True)
    nbrs = rng.normal(size=(4, 6, 3))
    nbrs /= np.linalg.norm(nbrs, axis=2, keepdims=True)
    loss, grad = normal_loss(pred, nbrs, nbrs[:, 0])
    for i in range(4):
        li, gi = normal_loss(pred[i], nbrs[i], nbrs[i, 0])
        assert loss[i] == pytest.approx(li, rel=1e-14)
        np.testing.assert_allclose(grad[i], gi, rtol=1e-13)


def test_exponent_variant_validation():
    nbrs = np.tile([0.0, 0.0, 1.0], (3, 1))
    for bad in (0, 3, -2, 2.5):
        with pytest.raises(ValueError):
            normal_loss_exponent_variant(np.array([0, 0, 1.0]), nbrs, nbrs[0], bad)
    loss, grad = normal_loss_exponent_variant(np.array([0, 0, 1.0]), nbrs, nbrs[0], 10)
    assert loss == 0.0
    np.testing.assert_allclose(grad, [0, 0, -10.0])
