#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Run: python benchmarks/bench_kernels.py [--repeats N]

Covers the three hot kernels at production-like sizes: the LSTM forward
and backward scans (a 20-token sentence at the default hidden width) and
the bootstrap resampling accumulator (10k iterations over 200 sentences).
"""

import argparse
import time

import numpy as np

from mtlseq.backend import get_backend


def timeit(fn, repeats):
    fn()  # warmup / jit compile
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    pure = get_backend("numpy")
    try:
        jit = get_backend("numba")
    except ImportError:
        print("numba unavailable; nothing to compare")
        return

    rng = np.random.default_rng(0)
    T, D, H = 20, 264, 100
    x = rng.normal(size=(T, D))
    w_x = rng.normal(size=(4 * H, D)) * 0.1
    w_h = rng.normal(size=(4 * H, H)) * 0.1
    b = np.zeros(4 * H)
    hs, cs, gates = pure.lstm_forward(x, w_x, w_h, b)
    dh = rng.normal(size=hs.shape)

    # desk-scale regime: small widths, where per-op overhead dominates
    Ts, Ds, Hs = 12, 32, 16
    xs = rng.normal(size=(Ts, Ds))
    w_xs = rng.normal(size=(4 * Hs, Ds)) * 0.1
    w_hs = rng.normal(size=(4 * Hs, Hs)) * 0.1
    bs = np.zeros(4 * Hs)
    hss, css, gatess = pure.lstm_forward(xs, w_xs, w_hs, bs)
    dhs = rng.normal(size=hss.shape)

    n_sent, iters = 200, 10000
    counts = rng.integers(0, 30, size=(n_sent, 6)).astype(np.int64)
    idx = rng.integers(0, n_sent, size=(iters, n_sent)).astype(np.int64)

    cases = [
        ("lstm_forward (T=20, D=264, H=100)",
         lambda m: m.lstm_forward(x, w_x, w_h, b)),
        ("lstm_backward (same shapes)",
         lambda m: m.lstm_backward(dh, x, w_x, w_h, hs, cs, gates)),
        ("lstm_forward (T=12, D=32, H=16)",
         lambda m: m.lstm_forward(xs, w_xs, w_hs, bs)),
        ("lstm_backward (same shapes)",
         lambda m: m.lstm_backward(dhs, xs, w_xs, w_hs, hss, css, gatess)),
        ("bootstrap_counts (10k x 200)",
         lambda m: m.bootstrap_counts(counts, idx)),
    ]
    print(f"{'kernel':<36} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, call in cases:
        t_pure = timeit(lambda: call(pure), args.repeats)
        t_jit = timeit(lambda: call(jit), args.repeats)
        print(f"{name:<36} {t_pure * 1e3:>8.3f}ms {t_jit * 1e3:>8.3f}ms "
              f"{t_pure / t_jit:>7.1f}x")


if __name__ == "__main__":
    main()
