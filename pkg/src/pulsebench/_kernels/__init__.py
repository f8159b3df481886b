"""Backend selection for the numerical hot kernels.

The compiled extension is used when it is importable. Setting the environment
variable ``PULSEBENCH_PURE=1`` forces the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if not os.environ.get("PULSEBENCH_PURE"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

cosine_sum = _impl.cosine_sum
combine_terms = _impl.combine_terms
lindblad_rhs = _impl.lindblad_rhs
dp45 = _impl.dp45
StepUnderflow = _pykernels.StepUnderflow

__all__ = ["BACKEND", "cosine_sum", "combine_terms", "lindblad_rhs", "dp45", "StepUnderflow"]
