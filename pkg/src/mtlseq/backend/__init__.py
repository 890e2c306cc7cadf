"""Numerical kernels with a numba fast path and a pure-numpy fallback.

The MTLSEQ_BACKEND environment variable selects the path: "numpy" forces
the fallback, "numba" requires the jit path (import error if numba is
missing), anything else (or unset) picks numba when importable.
"""

import os

from . import pure


def get_backend(name: str):
    """Return the kernel module for an explicit backend name."""
    if name == "numpy":
        return pure
    if name == "numba":
        from . import jit
        return jit
    raise ValueError(f"unknown backend {name!r}, expected 'numpy' or 'numba'")


def _select():
    choice = os.environ.get("MTLSEQ_BACKEND", "auto").strip().lower() or "auto"
    if choice in ("numpy", "numba"):
        return choice, get_backend(choice)
    if choice != "auto":
        raise ValueError(f"MTLSEQ_BACKEND={choice!r} not recognized")
    try:
        return "numba", get_backend("numba")
    except ImportError:
        return "numpy", pure


BACKEND, _impl = _select()

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
bootstrap_counts = _impl.bootstrap_counts
