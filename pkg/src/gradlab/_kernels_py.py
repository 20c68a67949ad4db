"""Pure-numpy winsorized-sum kernels, the fallback for the compiled core.

Same contracts as _kernels.pyx but implemented by materializing per-example
values, taking order statistics with np.partition, clipping and summing.
Chunked over coordinates to bound memory.  Slower, but has no tracker-size
cap and serves as the independent cross-check for the compiled path.
"""

from __future__ import annotations

import numpy as np

COMPILED = False
TRACKER_LIMIT = None

# per-chunk scratch of roughly chunk*m doubles
_CHUNK_VALUES = 1 << 21


def _winsorize_columns(values: np.ndarray, k: int) -> np.ndarray:
    """Clip each column of (m, n) values to its [k, m-1-k] order statistics, sum."""
    m = values.shape[0]
    if k == 0:
        return values.sum(axis=0)
    part = np.partition(values, (k, m - 1 - k), axis=0)
    return np.clip(values, part[k], part[m - 1 - k]).sum(axis=0)


def winsorized_outer_sum(deltaT, actsT, k, out=None, threads=1):
    """Winsorized sums of delta[e,i]*acts[e,j] over e, into out[i,j]."""
    fo, m = deltaT.shape
    fi = actsT.shape[0]
    if actsT.shape[1] != m:
        raise ValueError("deltaT and actsT disagree on minibatch size")
    if not 0 <= k < m:
        raise ValueError(f"k={k} unsupported for m={m}")
    if out is None:
        out = np.empty((fo, fi), dtype=np.float64)
    rows_per_chunk = max(1, _CHUNK_VALUES // (m * fi))
    for start in range(0, fo, rows_per_chunk):
        stop = min(start + rows_per_chunk, fo)
        # (m, rows, fi) per-example outer products for this row block
        block = deltaT[start:stop].T[:, :, None] * actsT.T[:, None, :]
        flat = block.reshape(m, -1)
        out[start:stop] = _winsorize_columns(flat, k).reshape(stop - start, fi)
    return out


def winsorized_column_sum(valuesT, k, out=None, threads=1):
    """Winsorized sum over each row of (n, m) valuesT."""
    n, m = valuesT.shape
    if not 0 <= k < m:
        raise ValueError(f"k={k} unsupported for m={m}")
    result = _winsorize_columns(valuesT.T, k)
    if out is None:
        return result
    out[:] = result
    return out
