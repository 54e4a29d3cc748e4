"""Hot-loop kernels with a compiled fast path and a numpy fallback.

The compiled extension is preferred when importable; set METASIR_FORCE_REF
to any nonempty value to force the reference implementation (used by the
equivalence tests and the benchmark).
"""

import os

import numpy as np

if os.environ.get("METASIR_FORCE_REF"):
    from . import _ref as _impl
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _ref as _impl

BACKEND = _impl.BACKEND

__all__ = ["BACKEND", "ps_products"]


def ps_products(rx, R, p0, tx, px, own, theta, alpha):
    """Batched conditional success probabilities; see _ref for the formula."""
    rx = np.ascontiguousarray(rx, dtype=np.float64)
    tx = np.ascontiguousarray(tx, dtype=np.float64)
    R = np.ascontiguousarray(R, dtype=np.float64)
    p0 = np.ascontiguousarray(p0, dtype=np.float64)
    px = np.ascontiguousarray(px, dtype=np.float64)
    own = np.ascontiguousarray(own, dtype=np.int64)
    if len(rx) == 0:
        return np.empty(0, dtype=np.float64)
    return np.asarray(_impl.ps_products(rx, R, p0, tx, px, own,
                                        float(theta), float(alpha)))
