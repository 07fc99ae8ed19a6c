"""Thread-pool helpers whose results do not depend on the worker count."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def map_ordered(fn, items, threads=1):
    """Apply fn to items, returning results in input order."""
    items = list(items)
    threads = max(1, int(threads or 1))
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))
