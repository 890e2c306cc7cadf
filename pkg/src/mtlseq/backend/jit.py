"""Numba-compiled kernels. Importing this module fails cleanly when numba
is unavailable; the package then falls back to the pure-numpy twin."""

import numpy as np
from numba import njit

from . import pure

lstm_forward = njit(cache=True)(pure.lstm_forward)
lstm_backward = njit(cache=True)(pure.lstm_backward)


@njit(cache=True)
def bootstrap_counts(counts, idx):
    iters, n = idx.shape
    k = counts.shape[1]
    out = np.zeros((iters, k), dtype=np.int64)
    for it in range(iters):
        for j in range(n):
            row = idx[it, j]
            for c in range(k):
                out[it, c] += counts[row, c]
    return out
