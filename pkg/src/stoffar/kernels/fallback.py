"""Pure-numpy CSR batch kernels, bitwise-equivalent to the compiled core.

Each kernel gathers the nonzeros of the requested rows into one flat segment
array and reduces with ``np.bincount``, which accumulates occurrences in
order; this reproduces the compiled core's sequential summation exactly.
"""

import numpy as np


def _flatten_rows(indptr, rows):
    starts = indptr[rows]
    lens = indptr[rows + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), lens
    # flat nonzero positions: concatenated [start, start+len) ranges
    offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    flat = np.arange(total, dtype=np.int64) + offsets
    return flat, lens


def csr_rows_dot(indptr, indices, data, rows, x):
    flat, lens = _flatten_rows(indptr, rows)
    vals = data[flat] * x[indices[flat]]
    seg = np.repeat(np.arange(rows.shape[0]), lens)
    return np.bincount(seg, weights=vals, minlength=rows.shape[0])


def csr_rows_weighted_sum(indptr, indices, data, rows, w, n):
    flat, lens = _flatten_rows(indptr, rows)
    vals = data[flat] * np.repeat(w, lens)
    return np.bincount(indices[flat], weights=vals, minlength=n)


def csr_rows_sq_dot(indptr, indices, data, rows, x):
    flat, lens = _flatten_rows(indptr, rows)
    d = data[flat]
    vals = d * d * x[indices[flat]]
    seg = np.repeat(np.arange(rows.shape[0]), lens)
    return np.bincount(seg, weights=vals, minlength=rows.shape[0])
