"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the pure-Python
implementation is.  Setting ``BUILDMST_PURE_PYTHON=1`` forces the fallback.
"""

import os

from buildmst import _pykernels

if os.environ.get("BUILDMST_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from buildmst import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"
RankKernel = _impl.RankKernel
PyRankKernel = _pykernels.RankKernel


def kernel_for(metric, backend=None):
    """A :class:`RankKernel` for ``metric``, cached on the metric per backend."""
    cls = {None: RankKernel, "python": PyRankKernel}.get(backend)
    if cls is None:
        if backend != "cython":
            raise ValueError(f"unknown kernel backend {backend!r}")
        from buildmst import _ckernels

        cls = _ckernels.RankKernel
    cache = metric.__dict__.setdefault("_kernels", {})
    if cls not in cache:
        cache[cls] = cls(metric.rank, metric.pair_a, metric.pair_b)
    return cache[cls]
