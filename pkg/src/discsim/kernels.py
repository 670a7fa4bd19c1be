"""Kernel dispatch: the compiled extension when it imports, numpy otherwise.

Set ``DISCSIM_PURE_PYTHON=1`` to force the numpy path.
"""

import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("DISCSIM_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def bcjr_app(lc, next_state, outputs, terminated=False, backend=None):
    """APP LLRs of the information bits on a joint rate-1/K trellis.

    ``lc`` has shape (B, K, N) or (K, N); the result drops the batch axis
    in the second case. ``terminated`` forces the final state to zero.
    """
    impl = _fallback if backend == "python" else _impl
    lc = np.ascontiguousarray(lc, dtype=np.float64)
    squeeze = lc.ndim == 2
    if squeeze:
        lc = lc[None]
    out = impl.bcjr_app(
        lc,
        np.ascontiguousarray(next_state, dtype=np.intp),
        np.ascontiguousarray(outputs, dtype=np.float64),
        bool(terminated),
    )
    return out[0] if squeeze else out


def sliding_product(frames, offsets, backend=None):
    impl = _fallback if backend == "python" else _impl
    frames = np.ascontiguousarray(frames, dtype=np.float64)
    squeeze = frames.ndim == 1
    if squeeze:
        frames = frames[None]
    out = impl.sliding_product(frames, np.ascontiguousarray(offsets, dtype=np.intp))
    return out[0] if squeeze else out
