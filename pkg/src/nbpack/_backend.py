"""Kernel backend selection.

Prefers the compiled extension; falls back to the numpy implementation when
the extension is missing or when NBPACK_PURE_PYTHON is set (any non-empty
value), which is how the benchmark and the parity tests pin a backend.
"""

from __future__ import annotations

import os

if os.environ.get("NBPACK_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND_NAME

mobius_dense = _impl.mobius_dense
zeta_dense = _impl.zeta_dense
worth_dense = _impl.worth_dense
grad_dense = _impl.grad_dense
worth_family = _impl.worth_family
grad_family = _impl.grad_family
