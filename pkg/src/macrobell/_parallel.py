"""Order-preserving map over independent sweep points."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "MACROBELL_WORKERS"


def resolve_workers(requested: int | None = None) -> int:
    if requested is None:
        requested = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, int(requested))


def map_ordered(fn, items, workers: int = 1) -> list:
    """Apply ``fn`` to ``items``; results come back in input order regardless of workers."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
