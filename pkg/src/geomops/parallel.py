"""Optional thread fan-out over point batches, capped by ``GEO_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

MIN_CHUNK = 256


def worker_count() -> int:
    try:
        n = int(os.environ.get("GEO_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def map_points(fn, pts: np.ndarray) -> np.ndarray:
    """``fn(pts)`` evaluated in contiguous chunks; results are concatenated in order.

    Chunking only changes which thread evaluates which point, never the order
    of the output, so downstream reductions stay bit-identical.
    """
    workers = worker_count()
    if workers == 1 or len(pts) < 2 * MIN_CHUNK:
        return fn(pts)
    chunks = np.array_split(pts, min(workers, len(pts) // MIN_CHUNK))
    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(fn, chunks))
    return np.concatenate(parts, axis=0)
