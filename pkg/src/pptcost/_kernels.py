"""Schur-complement assembly kernels.

The compiled extension is used when it imports; otherwise a vectorized numpy
version runs.  Set ``PPTCOST_PURE=1`` to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

try:
    if os.environ.get("PPTCOST_PURE", "") not in ("", "0"):
        raise ImportError("compiled kernels disabled by PPTCOST_PURE")
    from ._schur import schur_block as _schur_compiled
except ImportError:
    _schur_compiled = None

BACKEND = "compiled" if _schur_compiled is not None else "python"


def schur_block_python(x, zi, rows, cols, vals, counts=None, chunk=None):
    """Numpy reference for :func:`schur_block`.

    Padding entries must carry a zero value; ``counts`` is accepted for
    signature compatibility and ignored.
    """
    m, k = rows.shape
    out = np.empty((m, m))
    if m == 0:
        return out
    if chunk is None:
        chunk = max(1, int(4_000_000 // max(1, m * k * k)))
    rj, cj, vj = rows[None, None, :, :], cols[None, None, :, :], vals[None, None, :, :]
    for s in range(0, m, chunk):
        e = min(m, s + chunk)
        ri = rows[s:e, :, None, None]
        ci = cols[s:e, :, None, None]
        vi = vals[s:e, :, None, None]
        t = vi * vj * x[ci, rj] * zi[cj, ri]
        out[s:e] = t.sum(axis=(1, 3))
    return 0.5 * (out + out.T)


def schur_block(x, zi, rows, cols, vals, counts):
    """``M[i, j] = Tr(A_i X A_j Zi)`` for sparse symmetric ``A_i`` in padded form.

    Parameters
    ----------
    x, zi : ndarray
        Current primal block and inverse dual slack, ``n x n`` float64.
    rows, cols, vals : ndarray
        ``m x K`` arrays; row ``i`` lists the nonzeros of ``A_i``.
    counts : ndarray
        Number of valid entries per row.
    """
    if _schur_compiled is not None:
        return _schur_compiled(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(zi, dtype=np.float64),
            rows, cols, vals, counts,
        )
    return schur_block_python(x, zi, rows, cols, vals, counts)


def pad_block(a, n):
    """Padded per-constraint layout of a block's CSR coefficient matrix.

    Returns ``(active, rows, cols, vals, counts)`` where ``active`` are the
    constraint indices with a nonzero coefficient in this block.
    """
    a = a.tocsr()
    nnz = np.diff(a.indptr)
    active = np.flatnonzero(nnz)
    k = int(nnz.max()) if active.size else 0
    m = active.size
    rows = np.zeros((m, k), dtype=np.int64)
    cols = np.zeros((m, k), dtype=np.int64)
    vals = np.zeros((m, k))
    counts = nnz[active].astype(np.int64)
    for t, j in enumerate(active):
        lo, hi = a.indptr[j], a.indptr[j + 1]
        r, c = np.divmod(a.indices[lo:hi], n)
        rows[t, : hi - lo] = r
        cols[t, : hi - lo] = c
        vals[t, : hi - lo] = a.data[lo:hi]
    return active, rows, cols, vals, counts
