"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``ARMSOLVER_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels as python

try:
    if os.environ.get("ARMSOLVER_PURE_PYTHON"):
        raise ImportError("pure Python kernels requested")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

fk = _impl.fk
fk_jacobian = _impl.fk_jacobian


def implementations():
    """Available kernel modules by name, for tests and benchmarks."""
    out = {"python": python}
    if compiled is not None:
        out["cython"] = compiled
    return out
