"""Thread pool sized by the CKLS_THREADS environment variable."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "CKLS_THREADS"


def worker_count() -> int:
    """Pool size; ``CKLS_THREADS=0`` or unset means one worker per CPU."""
    raw = os.environ.get(ENV_VAR, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def pmap(fn, items) -> list:
    """``[fn(x) for x in items]`` in input order, possibly on worker threads.

    The numba kernels release the GIL, so threads give real parallelism.
    """
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
