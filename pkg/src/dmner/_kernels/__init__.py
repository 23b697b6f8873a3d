"""Hot kernels with a compiled core and a NumPy fallback.

The compiled backend (Cython) is preferred when the extension built;
otherwise the NumPy implementation is used.  ``DMNER_KERNEL`` forces a
choice: ``native``, ``numpy`` or ``auto`` (default).  Both backends
implement the same contract, including the first-index tie break of
``nearest_scan``.
"""

import os

import numpy as np

from ..errors import ConfigError
from . import _numpy

try:
    from . import _native
except ImportError:
    _native = None


def _pick(name: str):
    if name == "numpy":
        return _numpy
    if name == "native":
        if _native is None:
            raise ConfigError("DMNER_KERNEL=native but the compiled kernel is not built")
        return _native
    if name == "auto":
        return _native if _native is not None else _numpy
    raise ConfigError(f"unknown kernel backend {name!r} (use auto, native or numpy)")


_active = _pick(os.environ.get("DMNER_KERNEL", "auto"))


def backend_name() -> str:
    return _active.NAME


def available_backends() -> list[str]:
    return ["numpy", "native"] if _native is not None else ["numpy"]


def use_backend(name: str) -> None:
    """Switch backend at runtime (mainly for tests and benchmarks)."""
    global _active
    _active = _pick(name)


def _as_matrix(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def matvec(mat, vec) -> np.ndarray:
    """Dot product of every row of ``mat`` with ``vec``."""
    return _active.matvec(_as_matrix(mat), np.ascontiguousarray(vec, dtype=np.float64))


def nearest_scan(queries, entries):
    """Index and dot product of the best entry per query row.

    Ties break toward the lowest entry index in both backends.
    """
    q = _as_matrix(queries)
    e = _as_matrix(entries)
    if e.shape[0] == 0:
        raise ValueError("entries must be non-empty")
    if q.shape[1] != e.shape[1]:
        raise ValueError(f"dimension mismatch: {q.shape[1]} vs {e.shape[1]}")
    return _active.nearest_scan(q, e)
