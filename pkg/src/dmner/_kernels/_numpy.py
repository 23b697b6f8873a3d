"""NumPy implementations of the hot kernels (fallback backend)."""

import numpy as np

NAME = "numpy"

# Cap on the temporary similarity matrix built per chunk of queries.
_CHUNK = 4096


def matvec(mat: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Row-wise dot products of ``mat`` (m, d) with ``vec`` (d,)."""
    return mat @ vec


def nearest_scan(queries: np.ndarray, entries: np.ndarray):
    """Best entry per query by dot product; first index wins ties.

    Returns ``(idx, sims)`` with shapes (m,) int64 / (m,) float64.
    """
    m = queries.shape[0]
    idx = np.empty(m, dtype=np.int64)
    sims = np.empty(m, dtype=np.float64)
    for lo in range(0, m, _CHUNK):
        hi = min(lo + _CHUNK, m)
        block = queries[lo:hi] @ entries.T
        best = block.argmax(axis=1)  # first occurrence of the max
        idx[lo:hi] = best
        sims[lo:hi] = block[np.arange(hi - lo), best]
    return idx, sims
