"""Backend selection for the stepping kernels.

The compiled extension is used when importable; otherwise the pure-NumPy
twin takes over transparently.  Set WAVECONES_PURE_PYTHON=1 to force the
fallback (used by the backend-equivalence tests and the benchmark).
"""

from __future__ import annotations

import os

from ._kernels_py import laplacian

_force_py = os.environ.get("WAVECONES_PURE_PYTHON", "").lower() in ("1", "true", "yes")

if _force_py:
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND_NAME
step_batch = _impl.step_batch
evolve_mode = _impl.evolve_mode

__all__ = ["BACKEND", "evolve_mode", "laplacian", "step_batch"]
