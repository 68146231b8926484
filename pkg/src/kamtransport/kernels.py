"""Backend selection for the hot kernels.

The compiled extension ``_ckernels`` is preferred; the numpy module
``_pykernels`` is used when the extension is not built or when the
``KAMTRANSPORT_PURE_PYTHON`` environment variable is set to a non-empty value.
"""

import os

from . import _pykernels

if os.environ.get("KAMTRANSPORT_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

thomas = _impl.thomas
pchip_slopes = _impl.pchip_slopes
linear_eval = _impl.linear_eval
hermite_eval = _impl.hermite_eval
linear_invert = _impl.linear_invert
hermite_invert = _impl.hermite_invert

__all__ = [
    "BACKEND",
    "thomas",
    "pchip_slopes",
    "linear_eval",
    "hermite_eval",
    "linear_invert",
    "hermite_invert",
]
