"""CSR batch kernels: compiled core when available, numpy fallback otherwise.

Set STOFFAR_PURE_PYTHON=1 to force the fallback (used by tests and the
kernel benchmark). ``BACKEND`` reports which implementation is active.
"""

import os

from . import fallback

BACKEND = "fallback"

if not os.environ.get("STOFFAR_PURE_PYTHON"):
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = fallback
else:
    _impl = fallback

csr_rows_dot = _impl.csr_rows_dot
csr_rows_weighted_sum = _impl.csr_rows_weighted_sum
csr_rows_sq_dot = _impl.csr_rows_sq_dot

__all__ = ["csr_rows_dot", "csr_rows_weighted_sum", "csr_rows_sq_dot", "BACKEND", "fallback"]
