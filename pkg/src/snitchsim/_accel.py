"""Select the compiled kernels when available, else the pure-Python ones."""
from __future__ import annotations

import os

from . import _pure

BACKEND = "pure"
if os.environ.get("SNITCHSIM_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
        BACKEND = "native"
    except ImportError:
        _impl = _pure
else:
    _impl = _pure

fma = _impl.fma
affine_addresses = _impl.affine_addresses
arbitrate = _impl.arbitrate
