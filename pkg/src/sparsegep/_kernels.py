"""Select the coordinate-descent backend at import time.

The compiled extension is used when it was built; otherwise the pure-Python
kernels are used. Setting ``SPARSE_GEP_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _cd_py

try:
    if os.environ.get("SPARSE_GEP_PURE_PYTHON", "0") not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from . import _cd as _active
    BACKEND = "cython"
except ImportError:
    _active = _cd_py
    BACKEND = "python"

lasso_cd = _active.lasso_cd
group_cd = _active.group_cd


def available_backends():
    """Mapping of backend name to kernel module for every importable backend."""
    out = {"python": _cd_py}
    try:
        from . import _cd
    except ImportError:
        pass
    else:
        out["cython"] = _cd
    return out
