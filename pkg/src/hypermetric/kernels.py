"""Kernel dispatch.

The compiled extension ``hypermetric._kernels`` is used when importable; set
``HYPERMETRIC_PURE_PYTHON=1`` to force the pure-Python fallback.  ``BACKEND``
names the active implementation.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from hypermetric import _kernels_py

if os.environ.get("HYPERMETRIC_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from hypermetric import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

# |a - b| summed over K columns must stay below this
_INT64_SAFE = 2**62


def available_backends():
    out = {"python": _kernels_py}
    try:
        from hypermetric import _kernels

        out["compiled"] = _kernels
    except ImportError:
        pass
    return out


def _resolve(impl):
    if impl is None:
        return _impl
    if isinstance(impl, str):
        backends = available_backends()
        if impl not in backends:
            raise ValueError(f"backend {impl!r} unavailable; have {sorted(backends)}")
        return backends[impl]
    return impl


def _row_blocks(n, jobs):
    # upper-triangle rows get shorter: split on equal work, not equal rows
    if jobs <= 1 or n < 64:
        return [(0, n)]
    nblocks = 4 * jobs
    total = n * (n - 1) / 2
    bounds, acc, start = [], 0.0, 0
    for i in range(n):
        acc += n - 1 - i
        if acc >= total / nblocks and i + 1 < n:
            bounds.append((start, i + 1))
            start, acc = i + 1, 0.0
    bounds.append((start, n))
    return bounds


def int64_safe(values) -> bool:
    """True when pairwise L1 sums over the rows of ``values`` fit in int64."""
    if values.size == 0:
        return True
    if values.dtype != object and values.dtype.kind in "iu":
        top = int(values.max())
    else:
        top = max(int(v) for v in values.ravel())
    return top * max(values.shape[1], 1) < _INT64_SAFE


def l1_distance_matrix(values, jobs: int = 1, impl=None):
    """Exact pairwise L1 distances between the rows of a nonnegative table.

    Uses int64 kernels when no sum can overflow, otherwise Python integers
    (object dtype).  The result does not depend on ``jobs``.
    """
    impl = _resolve(impl)
    n = values.shape[0]
    if int64_safe(values):
        P = np.ascontiguousarray(values, dtype=np.int64)
        out = np.zeros((n, n), dtype=np.int64)
        blocks = _row_blocks(n, jobs)
        if len(blocks) == 1:
            impl.l1_rows(P, out, 0, n)
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                list(pool.map(lambda b: impl.l1_rows(P, out, b[0], b[1]), blocks))
        return out
    P = np.asarray(values, dtype=object)
    out = np.zeros((n, n), dtype=object)
    _kernels_py.l1_rows(P, out, 0, n)
    return out


def rips_pairs(R, threshold: int, max_dim: int, impl=None):
    """Persistence pairs on a rank matrix; see ``_kernels_py.rips_pairs``."""
    impl = _resolve(impl)
    return impl.rips_pairs(np.ascontiguousarray(R, dtype=np.int64), int(threshold), int(max_dim))
