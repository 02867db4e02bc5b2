"""Kernel selection: compiled extension when importable, else pure Python.

Set ``RADIALFLOW_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("RADIALFLOW_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

reverse_cumulative_quad = _impl.reverse_cumulative_quad
flow_update = _impl.flow_update
local_minima = _impl.local_minima

__all__ = ["BACKEND", "reverse_cumulative_quad", "flow_update", "local_minima"]
