"""Compare the numba and numpy implementations of each hot kernel.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported side by side regardless of
TRIPNORM_DISABLE_NUMBA; the first numba call is made before timing so JIT
compilation is excluded. Each row also checks that the two backends agree.
"""

import argparse
import time

import numpy as np

from tripnorm import _kernels as K
from tripnorm.nn import EncoderNet
from tripnorm.shapes import generate_shape
from tripnorm.spatial import SpatialIndex


def best_of(fn, repeat):
    fn()  # warm-up / JIT
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_ball_query(repeat):
    cloud = generate_shape("sphere", 100_000, 0)
    idx = SpatialIndex(cloud.points)
    rng = np.random.default_rng(0)
    centers = cloud.points[rng.choice(len(cloud), 500, replace=False)]
    args = (idx.points, idx.order, idx.cell_start, idx.origin, idx.cell_size, idx.dims)
    radius = 0.05 * 2 * np.sqrt(3)

    def run(kernel):
        return [kernel(*args, c, radius) for c in centers]

    same = all(np.array_equal(np.sort(a), np.sort(b))
               for a, b in zip(run(K.ball_query_numba), run(K.ball_query_numpy)))
    return ("ball_query x500 (100k pts)", best_of(lambda: run(K.ball_query_numba), repeat),
            best_of(lambda: run(K.ball_query_numpy), repeat), same)


def bench_maxpool_backward(repeat):
    enc = EncoderNet.create(0)
    rng = np.random.default_rng(1)
    patches = rng.uniform(-1, 1, size=(64, 128, 3))
    _, cache = enc.forward(patches)
    grad = rng.normal(size=(64, 1024))
    _, hidden, argmax, active, _ = cache
    W = enc.layers[-1].W

    def run(kernel):
        return kernel(grad, argmax, active, hidden, W)

    a, b = run(K.maxpool_backward_numba), run(K.maxpool_backward_numpy)
    same = all(np.allclose(x, y, rtol=1e-10, atol=1e-12) for x, y in zip(a, b))
    return ("maxpool_backward (64x128 pts)", best_of(lambda: run(K.maxpool_backward_numba), repeat),
            best_of(lambda: run(K.maxpool_backward_numpy), repeat), same)


def bench_covariance(repeat):
    rng = np.random.default_rng(2)
    points = rng.normal(size=(50_000, 3))
    neighbors = rng.integers(0, len(points), size=(50_000, 20))

    def run(kernel):
        return kernel(points, neighbors)

    same = np.allclose(run(K.neighborhood_covariance_numba),
                       run(K.neighborhood_covariance_numpy), rtol=1e-10, atol=1e-12)
    return ("neighborhood_covariance (50k x 20)",
            best_of(lambda: run(K.neighborhood_covariance_numba), repeat),
            best_of(lambda: run(K.neighborhood_covariance_numpy), repeat), same)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':38s} {'numba (ms)':>11s} {'numpy (ms)':>11s} {'speedup':>8s}  agree")
    for bench in (bench_ball_query, bench_maxpool_backward, bench_covariance):
        name, t_nb, t_np, same = bench(args.repeat)
        print(f"{name:38s} {t_nb * 1e3:11.2f} {t_np * 1e3:11.2f} {t_np / t_nb:7.1f}x  {same}")


if __name__ == "__main__":
    main()
