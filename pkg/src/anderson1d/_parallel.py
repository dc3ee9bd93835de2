"""Ordered map over independent jobs, optionally in worker processes."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, items, jobs: int = 1) -> list:
    """``[fn(x) for x in items]``; results come back in input order for any ``jobs``."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
