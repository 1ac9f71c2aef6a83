import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def thread_count() -> int:
    """Worker threads to use; ``CONFSEQ_THREADS`` caps the default of all cores."""
    env = os.environ.get("CONFSEQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def chunked_apply(fn, arr: np.ndarray, min_chunk: int = 4096) -> np.ndarray:
    """Elementwise ``fn`` over a 1-D array, split across threads.

    ``fn`` must map a contiguous float array to an array of the same length and
    release the GIL to gain anything.  Results do not depend on the split.
    """
    n = arr.shape[0]
    workers = min(thread_count(), max(1, n // min_chunk))
    if workers <= 1:
        return fn(arr)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    parts = [arr[bounds[i]:bounds[i + 1]] for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(fn, parts))
    return np.concatenate(results)
