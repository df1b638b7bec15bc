"""Small numpy helpers shared by the graph and recommender kernels."""

from __future__ import annotations

import numpy as np


def gather_ranges(starts: np.ndarray, lengths: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Concatenate data[starts[i] : starts[i] + lengths[i]] for all i, vectorized.

    Equivalent to np.concatenate([data[s:s+l] for s, l in zip(starts, lengths)])
    without the per-range Python overhead.
    """
    total = int(lengths.sum())
    if total == 0:
        return data[:0]
    ends = np.cumsum(lengths)
    # position j of the output maps to data[starts[i] + (j - exclusive_prefix[i])]
    idx = np.arange(total, dtype=np.int64)
    idx += np.repeat(starts - (ends - lengths), lengths)
    return data[idx]


def chunk_bounds(n: int, chunks: int) -> list[tuple[int, int]]:
    """Split range(n) into at most `chunks` contiguous, near-equal spans.

    Deterministic for fixed (n, chunks); empty spans are dropped so results
    are aggregation-order independent of the worker count.
    """
    chunks = max(1, min(chunks, n)) if n else 1
    q, r = divmod(n, chunks)
    bounds = []
    start = 0
    for i in range(chunks):
        size = q + (1 if i < r else 0)
        if size:
            bounds.append((start, start + size))
        start += size
    return bounds
