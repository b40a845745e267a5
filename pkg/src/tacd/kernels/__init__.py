"""Hot loops of the auction pipeline, with a numba and a pure-numpy backend.

The backend is chosen once at import: numba when it is importable, unless
the environment variable ``TACD_NUMBA`` is set to ``0``.  Both backends are
importable directly (``tacd.kernels.numpy_backend`` / ``numba_backend``)
for parity tests and benchmarks.

``sort_groups(bids, workloads, offsets, capacity, eps)``
    Sorts each AP's members per cloudlet by descending performance price
    ratio (ties: ascending member order).  Returns ``s (n, K)``, sorted
    ``pprs (n, K, L)``, prefix workloads ``(n, K, L)`` and each MU's 0-based
    position ``rank (N, K)``.  Padding beyond an AP's member count is zero.

``asc_batch(B, reserve, perm, u_frmg, use_frmg, top2)``
    Runs the AP/cloudlet matching on ``T`` budget matrices ``B (T, n, K)``.
    Returns ``sigma (T, n)`` (0-based cloudlet, -1 when unmatched) and the
    clearing price per AP ``(T, n)``.
"""
import os

import numpy as np

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None

USE_NUMBA = numba_backend is not None and os.environ.get("TACD_NUMBA", "1") != "0"
backend = numba_backend if USE_NUMBA else numpy_backend
BACKEND_NAME = "numba" if USE_NUMBA else "numpy"


def sort_groups(bids, workloads, offsets, capacity, eps=1e-9):
    return backend.sort_groups(
        np.ascontiguousarray(bids, dtype=np.float64),
        np.ascontiguousarray(workloads, dtype=np.float64),
        np.ascontiguousarray(offsets, dtype=np.int64),
        np.ascontiguousarray(capacity, dtype=np.float64),
        float(eps),
    )


def asc_batch(B, reserve, perm, u_frmg, use_frmg=False, top2=1):
    return backend.asc_batch(
        np.ascontiguousarray(B, dtype=np.float64),
        np.ascontiguousarray(reserve, dtype=np.float64),
        np.ascontiguousarray(perm, dtype=np.int64),
        np.ascontiguousarray(u_frmg, dtype=np.float64),
        bool(use_frmg),
        int(top2),
    )
