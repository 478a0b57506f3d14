"""Backend selection for the finite-volume update kernels.

The compiled extension is preferred when present; the NumPy fallback is
arithmetic-identical.  Set NETFLUX_PURE_PYTHON=1 to force the fallback.
"""

import os

if os.environ.get("NETFLUX_PURE_PYTHON"):
    from . import _fvkernels_py as _impl
else:
    try:
        from . import _fvkernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _fvkernels_py as _impl

BACKEND = _impl.BACKEND
upwind_update_const = _impl.upwind_update_const
upwind_update_var = _impl.upwind_update_var
godunov_update = _impl.godunov_update
