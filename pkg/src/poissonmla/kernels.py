"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise the pure-Python
module is loaded.  Setting ``POISSONMLA_PURE=1`` forces the fallback.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if not os.environ.get("POISSONMLA_PURE"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def service_weights(parent, weight, root, locations, assignment, n_services, backend=None):
    impl = _pick(backend)
    return impl.service_weights(
        np.ascontiguousarray(parent, dtype=np.int64),
        np.ascontiguousarray(weight, dtype=np.float64),
        int(root),
        np.ascontiguousarray(locations, dtype=np.int64),
        np.ascontiguousarray(assignment, dtype=np.int64),
        int(n_services),
    )


def opt_subset_dp(group_masks, group_weights, times, backend=None):
    impl = _pick(backend)
    cost, choice = impl.opt_subset_dp(
        np.ascontiguousarray(group_masks, dtype=np.uint64),
        np.ascontiguousarray(group_weights, dtype=np.float64),
        np.ascontiguousarray(times, dtype=np.float64),
    )
    return float(cost), np.asarray(choice)


def _pick(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        if BACKEND != "cython":
            raise ImportError("compiled kernels are not available")
        return _impl
    raise ValueError(f"unknown backend {backend!r}")
