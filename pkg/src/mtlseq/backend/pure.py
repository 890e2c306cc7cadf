"""Pure-numpy implementations of the hot kernels.

``lstm_forward``/``lstm_backward`` are written in numba-compatible numpy
(explicit time loop, no helper calls) so the jit backend compiles these
exact functions; ``bootstrap_counts`` has a vectorized form here and a loop
form in the jit module.
"""

import numpy as np


def lstm_forward(x, w_x, w_h, b):
    """Run an LSTM over x (T, D) with zero initial state.

    Gate layout along the 4H axis: input, forget, candidate, output.
    Returns (hidden (T, H), cell (T, H), activated gates (T, 4H)); the
    latter two are caches for the backward pass.
    """
    steps = x.shape[0]
    width = b.shape[0] // 4
    hs = np.zeros((steps, width))
    cs = np.zeros((steps, width))
    gates = np.zeros((steps, 4 * width))
    h = np.zeros(width)
    c = np.zeros(width)
    for t in range(steps):
        z = np.dot(w_x, x[t]) + np.dot(w_h, h) + b
        i = 1.0 / (1.0 + np.exp(-z[:width]))
        f = 1.0 / (1.0 + np.exp(-z[width:2 * width]))
        g = np.tanh(z[2 * width:3 * width])
        o = 1.0 / (1.0 + np.exp(-z[3 * width:]))
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t, :width] = i
        gates[t, width:2 * width] = f
        gates[t, 2 * width:3 * width] = g
        gates[t, 3 * width:] = o
        cs[t] = c
        hs[t] = h
    return hs, cs, gates


def lstm_backward(d_h_out, x, w_x, w_h, hs, cs, gates):
    """Reverse sweep matching lstm_forward; returns (dx, dw_x, dw_h, db)."""
    steps = x.shape[0]
    width = hs.shape[1]
    w_x_t = w_x.T.copy()
    w_h_t = w_h.T.copy()
    dx = np.zeros_like(x)
    dw_x = np.zeros_like(w_x)
    dw_h = np.zeros_like(w_h)
    db = np.zeros(4 * width)
    dh_carry = np.zeros(width)
    dc_carry = np.zeros(width)
    zeros = np.zeros(width)
    dz = np.empty(4 * width)
    for t in range(steps - 1, -1, -1):
        i = gates[t, :width]
        f = gates[t, width:2 * width]
        g = gates[t, 2 * width:3 * width]
        o = gates[t, 3 * width:]
        tc = np.tanh(cs[t])
        dh = d_h_out[t] + dh_carry
        do = dh * tc
        dc = dc_carry + dh * o * (1.0 - tc * tc)
        c_prev = cs[t - 1] if t > 0 else zeros
        h_prev = hs[t - 1] if t > 0 else zeros
        dz[:width] = (dc * g) * i * (1.0 - i)
        dz[width:2 * width] = (dc * c_prev) * f * (1.0 - f)
        dz[2 * width:3 * width] = (dc * i) * (1.0 - g * g)
        dz[3 * width:] = do * o * (1.0 - o)
        dw_x += dz.reshape(-1, 1) * x[t].reshape(1, -1)
        dw_h += dz.reshape(-1, 1) * h_prev.reshape(1, -1)
        db += dz
        dx[t] = np.dot(w_x_t, dz)
        dh_carry = np.dot(w_h_t, dz)
        dc_carry = dc * f
    return dx, dw_x, dw_h, db


def bootstrap_counts(counts, idx):
    """Per-resample column sums: out[i] = counts[idx[i]].sum(axis=0).

    counts is (n, k) int64, idx is (iters, n) int64.
    """
    iters, n = idx.shape
    out = np.empty((iters, counts.shape[1]), dtype=np.int64)
    # chunk the fancy indexing to bound temporary memory
    step = max(1, 8_000_000 // max(n, 1))
    for lo in range(0, iters, step):
        out[lo:lo + step] = counts[idx[lo:lo + step]].sum(axis=1)
    return out
