"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is warmed up once (JIT compile) before timing and checked for
agreement between backends. The batch kernels build subset phasors by
products rather than one trig call per term, so near resonance, where the
denominator nearly cancels, they agree only to about 1e-8 relative.
"""
import argparse
import time

import numpy as np

from etalon_forge import kernels
from etalon_forge.model import subset_coefficients


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(7)
    phase = np.sort(rng.uniform(0, 2 * np.pi, 4096))
    r = np.sqrt(np.array([0.87, 0.99, 0.99, 0.99, 0.91]))
    X = rng.integers(1, 100, size=(256, 4))
    coeffs = subset_coefficients(r)
    y = kernels.batch_intensity_np(X, coeffs, 0.01, phase)
    y /= y.max(axis=1, keepdims=True)
    dense = rng.integers(0, 400, size=64)
    return [
        ("sparse_eval 64 terms x 4096", kernels.sparse_eval_nb, kernels.sparse_eval_np,
         (dense, rng.normal(size=64), phase)),
        ("batch_intensity 256 x 16 x 4096", kernels.batch_intensity_nb, kernels.batch_intensity_np,
         (X, coeffs, 0.01, phase)),
        ("cascade 4 cavities x 4096", kernels.cascade_nb, kernels.cascade_np,
         (r, X[0].astype(float), phase)),
        ("rejection_batch 256 x 4096", kernels.rejection_batch_nb, kernels.rejection_batch_np,
         (y, 0.5)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':36s} {'numpy (ms)':>11s} {'numba (ms)':>11s} {'speedup':>8s}")
    for name, fast, slow, fargs in cases():
        a, b = fast(*fargs), slow(*fargs)
        if not np.allclose(a, b, rtol=1e-7, atol=1e-12, equal_nan=True):
            raise SystemExit(f"{name}: backends disagree")
        t_nb = best_of(fast, fargs, args.repeat)
        t_np = best_of(slow, fargs, args.repeat)
        print(f"{name:36s} {t_np * 1e3:11.2f} {t_nb * 1e3:11.2f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
