"""Kernel selection: the compiled extension when available, numpy otherwise.

Set ``REPVAL_PURE_PYTHON=1`` to force the numpy fallback.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _fallback

_impl = _fallback
NAME = "python"
if not os.environ.get("REPVAL_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        NAME = "cython"
    except ImportError:  # extension not built
        pass

TIE_TOL = 1e-12


def default_threads() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _ranges(total: int, parts: int):
    parts = max(1, min(parts, total))
    edges = np.linspace(0, total, parts + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(lambda it: fn(*it), items))


def bruteforce(w2, xdims, adims, total: int, threads: int = 1, impl=None):
    """(max value, first candidate index within TIE_TOL of it)."""
    impl = impl or _impl
    w2 = np.ascontiguousarray(w2, dtype=np.float64)
    xd = np.asarray(xdims, dtype=np.int64)
    ad = np.asarray(adims, dtype=np.int64)
    parts = _ranges(total, threads)
    best = max(_map(lambda a, b: impl.bf_max(w2, xd, ad, a, b), parts, threads))
    for a, b in parts:  # ranges in order, so the first hit is the global first
        hit = impl.bf_first(w2, xd, ad, a, b, best - TIE_TOL)
        if hit >= 0:
            return float(best), int(hit)
    raise AssertionError("no candidate reached the maximum")


def search_mc(loss, psucc, q: int, m: int, samples: int, key: int, threads: int = 1, impl=None):
    impl = impl or _impl
    loss = np.ascontiguousarray(loss, dtype=np.uint8)
    psucc = np.ascontiguousarray(psucc, dtype=np.float64)
    parts = _ranges(samples, threads)
    out = _map(lambda a, b: impl.search_mc(loss, psucc, q, m, a, b - a, key), parts, threads)
    return np.concatenate([r for r, _ in out]), np.concatenate([f for _, f in out])
