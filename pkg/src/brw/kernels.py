"""Kernel backend selection.

The compiled extension is used when importable; set BRW_PURE_PYTHON=1 to
force the numpy fallback.  Both backends produce identical outputs.
"""
import os

from . import _pykernels

child_index = _pykernels.child_index
mix64 = _pykernels.mix64
mix64_int = _pykernels.mix64_int
level_key = _pykernels.level_key

_compiled = None
if os.environ.get("BRW_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"
_impl = _compiled if _compiled is not None else _pykernels

vertex_digits = _impl.vertex_digits
vertex_digits_multi = _impl.vertex_digits_multi
leaf_values = _impl.leaf_values
leaf_values_batch = _impl.leaf_values_batch
gw_level_sizes = _impl.gw_level_sizes


def backend(name: str):
    """Return the kernel module for ``name`` ("cython" or "numpy")."""
    if name == "numpy":
        return _pykernels
    if _compiled is None:
        raise ImportError("compiled kernels are not built")
    return _compiled
