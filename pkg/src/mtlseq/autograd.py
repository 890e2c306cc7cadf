"""Reverse-mode automatic differentiation over float64 numpy arrays.

A Tape records Value nodes in construction order; since inputs always
precede consumers, the backward pass is one reverse sweep over the node
list, no explicit topological sort. Parameters live outside any tape and
persist across instances; every forward pass records a fresh Tape. A tape
is single-threaded; distinct tapes on distinct threads are independent.

A tape built with ``recording=False`` computes forward values only and
skips all backward bookkeeping; finite-difference checks use this mode so
the oracle never touches the code path it verifies.

The LSTM recurrence is a single fused tape operation whose forward and
backward passes run in the kernel backend (numba or numpy).
"""

import struct

import numpy as np

from . import backend


class Param:
    """A trainable array with a persistent gradient accumulator."""

    __slots__ = ("name", "data", "grad")

    def __init__(self, name, data):
        self.name = name
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Param({self.name!r}, shape={self.data.shape})"


class Value:
    """One tape node: a forward array plus its local backward rule."""

    __slots__ = ("data", "grad", "_backward")

    def __init__(self, data, backward=None):
        self.data = data
        self.grad = None
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape


class Tape:
    """Append-only computation record; backward() replays it in reverse."""

    __slots__ = ("nodes", "recording", "_leaves")

    def __init__(self, recording: bool = True):
        self.nodes: list[Value] = []
        self.recording = recording
        self._leaves: dict[int, Value] = {}

    def value(self, data, backward=None) -> Value:
        node = Value(data, backward)
        if self.recording:
            self.nodes.append(node)
        return node

    def constant(self, array) -> Value:
        return self.value(np.asarray(array, dtype=np.float64))

    def leaf(self, param: Param) -> Value:
        """The tape node viewing a parameter; one shared node per param, so
        repeated uses accumulate into one gradient before it flows into the
        param's own accumulator."""
        node = self._leaves.get(id(param))
        if node is not None:
            return node
        if self.recording:
            def back(n):
                param.grad += n.grad

            node = self.value(param.data, back)
        else:
            node = self.value(param.data)
        self._leaves[id(param)] = node
        return node

    def backward(self, loss: Value) -> None:
        if not self.recording:
            raise ValueError("cannot backpropagate through a non-recording tape")
        if np.ndim(loss.data) != 0:
            raise ValueError(
                f"backward requires a scalar loss, got shape {np.shape(loss.data)}"
            )
        loss.grad = np.asarray(1.0)
        for node in reversed(self.nodes):
            if node.grad is not None and node._backward is not None:
                node._backward(node)


def _accum(node: Value, g) -> None:
    if node.grad is None:
        node.grad = np.zeros_like(node.data)
    node.grad += g


# ---------------------------------------------------------------------------
# primitives

def matmul(tape: Tape, a: Value, b: Value) -> Value:
    """Matrix product: (M,N)@(N,) -> (M,), (M,N)@(N,K) -> (M,K),
    (N,)@(N,) -> scalar dot."""
    ad, bd = a.data, b.data
    if ad.shape[-1] != bd.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {ad.shape} @ {bd.shape}")
    out = ad @ bd
    if not tape.recording:
        return tape.value(out)

    def back(node):
        g = node.grad
        if ad.ndim == 1 and bd.ndim == 1:
            _accum(a, g * bd)
            _accum(b, g * ad)
        elif bd.ndim == 1:
            _accum(a, np.outer(g, bd))
            _accum(b, ad.T @ g)
        else:
            _accum(a, g @ bd.T)
            _accum(b, ad.T @ g)

    return tape.value(out, back)


def add(tape: Tape, a: Value, b: Value) -> Value:
    if a.data.shape != b.data.shape:
        raise ValueError(f"add: shape mismatch {a.data.shape} vs {b.data.shape}")
    out = a.data + b.data
    if not tape.recording:
        return tape.value(out)

    def back(node):
        _accum(a, node.grad)
        _accum(b, node.grad)

    return tape.value(out, back)


def hadamard(tape: Tape, a: Value, b: Value) -> Value:
    if a.data.shape != b.data.shape:
        raise ValueError(f"hadamard: shape mismatch {a.data.shape} vs {b.data.shape}")
    out = a.data * b.data
    if not tape.recording:
        return tape.value(out)

    def back(node):
        _accum(a, node.grad * b.data)
        _accum(b, node.grad * a.data)

    return tape.value(out, back)


def tanh(tape: Tape, x: Value) -> Value:
    out = np.tanh(x.data)
    if not tape.recording:
        return tape.value(out)

    def back(node):
        _accum(x, node.grad * (1.0 - out * out))

    return tape.value(out, back)


def sigmoid(tape: Tape, x: Value) -> Value:
    out = 1.0 / (1.0 + np.exp(-x.data))
    if not tape.recording:
        return tape.value(out)

    def back(node):
        _accum(x, node.grad * out * (1.0 - out))

    return tape.value(out, back)


def scale(tape: Tape, x: Value, c: float) -> Value:
    out = x.data * c
    if not tape.recording:
        return tape.value(out)

    def back(node):
        _accum(x, node.grad * c)

    return tape.value(out, back)


def ssum(tape: Tape, x: Value) -> Value:
    """Sum of all elements, as a scalar node."""
    out = np.asarray(x.data.sum())
    if not tape.recording:
        return tape.value(out)

    def back(node):
        _accum(x, np.full_like(x.data, float(node.grad)))

    return tape.value(out, back)


def concat(tape: Tape, parts: list[Value], axis: int = 0) -> Value:
    out = np.concatenate([p.data for p in parts], axis=axis)
    if not tape.recording:
        return tape.value(out)
    offsets = [0]
    for p in parts:
        offsets.append(offsets[-1] + p.data.shape[axis])

    def back(node):
        g = node.grad
        for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if axis == 0:
                _accum(part, g[lo:hi])
            else:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                _accum(part, g[tuple(sl)])

    return tape.value(out, back)


def stack_rows(tape: Tape, rows: list[Value]) -> Value:
    """Stack 1-D vectors into a (T, D) matrix."""
    out = np.stack([r.data for r in rows])
    if not tape.recording:
        return tape.value(out)

    def back(node):
        for t, row in enumerate(rows):
            _accum(row, node.grad[t])

    return tape.value(out, back)


def pick_row(tape: Tape, m: Value, i: int) -> Value:
    out = m.data[i]
    if not tape.recording:
        return tape.value(out)

    def back(node):
        if m.grad is None:
            m.grad = np.zeros_like(m.data)
        m.grad[i] += node.grad

    return tape.value(out, back)


def reverse_rows(tape: Tape, m: Value) -> Value:
    out = m.data[::-1].copy()
    if not tape.recording:
        return tape.value(out)

    def back(node):
        _accum(m, node.grad[::-1])

    return tape.value(out, back)


def softmax(tape: Tape, x: Value) -> Value:
    """Softmax of a 1-D vector, numerically stabilized."""
    z = x.data - x.data.max()
    e = np.exp(z)
    out = e / e.sum()
    if not tape.recording:
        return tape.value(out)

    def back(node):
        g = node.grad
        _accum(x, out * (g - float(out @ g)))

    return tape.value(out, back)


def log_softmax(tape: Tape, x: Value) -> Value:
    z = x.data - x.data.max()
    lse = np.log(np.exp(z).sum())
    out = z - lse
    if not tape.recording:
        return tape.value(out)

    def back(node):
        g = node.grad
        _accum(x, g - np.exp(out) * g.sum())

    return tape.value(out, back)


def lookup(tape: Tape, table: Param, indices) -> Value:
    """Embedding lookup: rows of ``table`` selected by an index array.
    Gradients scatter-add into the table."""
    idx = np.asarray(indices, dtype=np.int64)
    out = table.data[idx]
    if not tape.recording:
        return tape.value(out)

    def back(node):
        np.add.at(table.grad, idx, node.grad)

    return tape.value(out, back)


def affine_rows(tape: Tape, h: Value, w: Value, b: Value) -> Value:
    """Row-wise affine map: (T, D) x (K, D) + (K,) -> (T, K)."""
    if h.data.shape[1] != w.data.shape[1]:
        raise ValueError(
            f"affine_rows: shape mismatch {h.data.shape} vs {w.data.shape}"
        )
    out = h.data @ w.data.T + b.data
    if not tape.recording:
        return tape.value(out)

    def back(node):
        g = node.grad
        _accum(h, g @ w.data)
        _accum(w, g.T @ h.data)
        _accum(b, g.sum(axis=0))

    return tape.value(out, back)


def lstm(tape: Tape, x: Value, w_x: Value, w_h: Value, b: Value) -> Value:
    """Fused LSTM scan over x (T, D) with zero initial state; returns the
    hidden-state sequence (T, H). Forward and backward run in the kernel
    backend."""
    xd = x.data
    hs, cs, gates = backend.lstm_forward(xd, w_x.data, w_h.data, b.data)
    if not tape.recording:
        return tape.value(hs)

    def back(node):
        dx, dw_x, dw_h, db = backend.lstm_backward(
            np.ascontiguousarray(node.grad), xd, w_x.data, w_h.data, hs, cs, gates
        )
        _accum(x, dx)
        _accum(w_x, dw_x)
        _accum(w_h, dw_h)
        _accum(b, db)

    return tape.value(hs, back)


def bilstm_rows(tape: Tape, x: Value, fwd_weights, bwd_weights) -> Value:
    """One bidirectional layer fused into a single node: a left-to-right
    scan and a right-to-left scan over x (T, D), their outputs concatenated
    per row into (T, 2H). Weight triples are (w_x, w_h, b) Params whose
    gradients accumulate directly."""
    fwx, fwh, fb = fwd_weights
    bwx, bwh, bb = bwd_weights
    xd = x.data
    xr = xd[::-1].copy()
    hf, cf, gf = backend.lstm_forward(xd, fwx.data, fwh.data, fb.data)
    hb, cb, gb = backend.lstm_forward(xr, bwx.data, bwh.data, bb.data)
    width = hf.shape[1]
    out = np.concatenate([hf, hb[::-1]], axis=1)
    if not tape.recording:
        return tape.value(out)

    def back(node):
        g = node.grad
        dh_f = np.ascontiguousarray(g[:, :width])
        dh_b = np.ascontiguousarray(g[::-1, width:])
        dx_f, dwx, dwh, db = backend.lstm_backward(dh_f, xd, fwx.data, fwh.data, hf, cf, gf)
        fwx.grad += dwx
        fwh.grad += dwh
        fb.grad += db
        dx_b, dwx, dwh, db = backend.lstm_backward(dh_b, xr, bwx.data, bwh.data, hb, cb, gb)
        bwx.grad += dwx
        bwh.grad += dwh
        bb.grad += db
        _accum(x, dx_f + dx_b[::-1])

    return tape.value(out, back)


def bilstm_final_concat(tape: Tape, table: Param, ids, fwd_weights, bwd_weights) -> Value:
    """Embed a short index sequence, scan it left-to-right and
    right-to-left, and return the two final hidden states concatenated:
    the per-token character feature. Gradients accumulate directly into
    the weight Params and scatter-add into the embedding table."""
    idx = np.asarray(ids, dtype=np.int64)
    idx_rev = idx[::-1]
    x_f = table.data[idx]
    x_b = table.data[idx_rev]
    fwx, fwh, fb = fwd_weights
    bwx, bwh, bb = bwd_weights
    hf, cf, gf = backend.lstm_forward(x_f, fwx.data, fwh.data, fb.data)
    hb, cb, gb = backend.lstm_forward(x_b, bwx.data, bwh.data, bb.data)
    width = hf.shape[1]
    out = np.concatenate([hf[-1], hb[-1]])
    if not tape.recording:
        return tape.value(out)

    def back(node):
        g = node.grad
        dh_f = np.zeros_like(hf)
        dh_f[-1] = g[:width]
        dh_b = np.zeros_like(hb)
        dh_b[-1] = g[width:]
        dx_f, dwx, dwh, db = backend.lstm_backward(dh_f, x_f, fwx.data, fwh.data, hf, cf, gf)
        fwx.grad += dwx
        fwh.grad += dwh
        fb.grad += db
        dx_b, dwx, dwh, db = backend.lstm_backward(dh_b, x_b, bwx.data, bwh.data, hb, cb, gb)
        bwx.grad += dwx
        bwh.grad += dwh
        bb.grad += db
        np.add.at(table.grad, idx, dx_f)
        np.add.at(table.grad, idx_rev, dx_b)

    return tape.value(out, back)


def nll_rows(tape: Tape, logits: Value, targets) -> Value:
    """Sum over rows of -log softmax(row)[target]; the cross-entropy loss
    of a label sequence."""
    y = np.asarray(targets, dtype=np.int64)
    z = logits.data
    if y.shape[0] != z.shape[0]:
        raise ValueError(f"nll_rows: {y.shape[0]} targets for {z.shape[0]} rows")
    m = z.max(axis=1, keepdims=True)
    e = np.exp(z - m)
    sums = e.sum(axis=1)
    rows = np.arange(z.shape[0])
    loss = float(np.sum(np.log(sums) + m[:, 0] - z[rows, y]))
    if not tape.recording:
        return tape.value(np.asarray(loss))

    def back(node):
        g = e / sums[:, None]
        g[rows, y] -= 1.0
        _accum(logits, g * float(node.grad))

    return tape.value(np.asarray(loss), back)


# ---------------------------------------------------------------------------
# optimization and parameter files

def sgd_step(params, learning_rate, grads=None):
    """One plain SGD update, p <- p - lr * g, in place.

    With ``grads=None`` each param's own accumulator is applied and then
    zeroed (the per-instance update cycle).
    """
    if grads is None:
        for p in params:
            p.data -= learning_rate * p.grad
            p.grad[...] = 0.0
        return
    if len(grads) != len(params):
        raise ValueError("params and grads differ in length")
    for p, g in zip(params, grads):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.data.shape:
            raise ValueError(
                f"sgd_step: gradient shape {g.shape} does not match "
                f"param {p.name!r} shape {p.data.shape}"
            )
        p.data -= learning_rate * g


def numeric_gradient(loss_fn, param: Param, step: float = 1e-4) -> np.ndarray:
    """Central finite differences of ``loss_fn()`` w.r.t. one param.

    Independent of the tape's backward pass: only forward evaluations.
    """
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    gflat = grad.reshape(-1)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + step
        hi = loss_fn()
        flat[j] = orig - step
        lo = loss_fn()
        flat[j] = orig
        gflat[j] = (hi - lo) / (2.0 * step)
    return grad


_PARAM_FILE_VERSION = 1


def save_params(params, path) -> None:
    """Write params to a flat binary file: version byte, then a shape table
    (name and dims as little-endian u64), then raw little-endian float64."""
    with open(path, "wb") as fh:
        fh.write(bytes([_PARAM_FILE_VERSION]))
        fh.write(struct.pack("<Q", len(params)))
        for p in params:
            name = p.name.encode("utf-8")
            fh.write(struct.pack("<Q", len(name)))
            fh.write(name)
            fh.write(struct.pack("<Q", p.data.ndim))
            fh.write(struct.pack(f"<{p.data.ndim}Q", *p.data.shape))
        for p in params:
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def load_params(path) -> list[Param]:
    with open(path, "rb") as fh:
        version = fh.read(1)[0]
        if version != _PARAM_FILE_VERSION:
            raise ValueError(f"unsupported parameter file version {version}")
        (count,) = struct.unpack("<Q", fh.read(8))
        shapes = []
        for _ in range(count):
            (name_len,) = struct.unpack("<Q", fh.read(8))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<Q", fh.read(8))
            shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
            shapes.append((name, shape))
        params = []
        for name, shape in shapes:
            n = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(shape)
            params.append(Param(name, data.copy()))
    return params
