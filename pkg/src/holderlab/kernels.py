"""Kernel selection: the compiled core when built, numpy otherwise.

Set HOLDERLAB_PURE_PYTHON=1 to force the numpy kernels.
"""

import os

from . import _pykernels as python_kernels

try:
    from . import _kernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("HOLDERLAB_PURE_PYTHON", "") not in ("1", "true"):
    _impl = compiled_kernels
    BACKEND = "cython"
else:
    _impl = python_kernels
    BACKEND = "python"

eo_sweep = _impl.eo_sweep
superlevel_sum = _impl.superlevel_sum
hypograph_sum = _impl.hypograph_sum
ppoly_eval = python_kernels.ppoly_eval

__all__ = ["BACKEND", "eo_sweep", "superlevel_sum", "hypograph_sum", "ppoly_eval", "compiled_kernels", "python_kernels"]
