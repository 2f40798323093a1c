"""Pure numpy implementations of the hot kernels.

Results match the compiled kernels bit for bit: the same candidate order,
the same tie rule and the same counter-based random stream.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_GATHER_LIMIT = 1 << 22  # elements per vectorized block


def splitmix64(key: int, counters: np.ndarray) -> np.ndarray:
    """Counter-based stream: mix(key + (ctr + 1) * golden)."""
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (np.asarray(counters, dtype=np.uint64) + np.uint64(1)) * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def _bounded(z: np.ndarray, n) -> np.ndarray:
    return ((z >> np.uint64(32)) * np.asarray(n, dtype=np.uint64)) >> np.uint64(32)


def _unit(z: np.ndarray) -> np.ndarray:
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def _rest_values(w2, xdims, adims, start, stop):
    """Objective for candidate indices [start, stop) of players 2..k."""
    x1, a1, xr, ar = w2.shape
    idx = np.arange(start, stop, dtype=np.int64)
    # decode mixed radix: player 2 most significant, within a player x = 0 most significant
    tables = []
    for xd, ad in zip(reversed(xdims), reversed(adims)):
        cols = np.empty((len(idx), xd), dtype=np.int64)
        for x in range(xd - 1, -1, -1):
            cols[:, x] = idx % ad
            idx = idx // ad
        tables.append(cols)
    tables.reverse()
    # answer-tuple index for every rest input tuple
    arest = np.zeros((stop - start, xr), dtype=np.int64)
    xgrid = np.stack(np.unravel_index(np.arange(xr), xdims), axis=1) if xdims else np.zeros((1, 0), np.int64)
    for j, (t, ad) in enumerate(zip(tables, adims)):
        arest = arest * ad + t[:, xgrid[:, j]]
    flat = w2.reshape(x1 * a1, xr * ar)
    cols = np.arange(xr) * ar + arest  # (S, xr)
    gathered = flat[:, cols]  # (x1 a1, S, xr)
    acc = np.zeros(gathered.shape[:2])
    for r in range(xr):  # sequential sum, same order as the compiled loop
        acc += gathered[:, :, r]
    best = acc.reshape(x1, a1, -1).max(axis=1)
    total = np.zeros(best.shape[1])
    for x in range(x1):
        total += best[x]
    return total


def _chunk(w2) -> int:
    return max(1, _GATHER_LIMIT // (w2.shape[0] * w2.shape[1] * w2.shape[2]))


def bf_max(w2: np.ndarray, xdims, adims, start: int, stop: int) -> float:
    """Largest objective over candidates [start, stop) of players 2..k.

    ``w2`` has shape (X1, A1, prod X_rest, prod A_rest); player 1 best-responds.
    """
    w2 = np.ascontiguousarray(w2, dtype=np.float64)
    best = -np.inf
    chunk = _chunk(w2)
    for lo in range(start, stop, chunk):
        vals = _rest_values(w2, list(xdims), list(adims), lo, min(stop, lo + chunk))
        best = max(best, float(vals.max()))
    return best


def bf_first(w2: np.ndarray, xdims, adims, start: int, stop: int, threshold: float) -> int:
    """First candidate in [start, stop) with objective >= threshold, or -1."""
    w2 = np.ascontiguousarray(w2, dtype=np.float64)
    chunk = _chunk(w2)
    for lo in range(start, stop, chunk):
        vals = _rest_values(w2, list(xdims), list(adims), lo, min(stop, lo + chunk))
        hit = np.flatnonzero(vals >= threshold)
        if hit.size:
            return lo + int(hit[0])
    return -1


def search_mc(loss: np.ndarray, psucc: np.ndarray, q: int, m: int, start: int, samples: int,
              key: int):
    """Simulated group searches for samples [start, start + samples).

    Returns (rb, found): rb[s] is the product over groups of (1 - psucc[t_g]),
    found[s] is the verified losing index reported by the first successful
    group, or -1 if every group came back empty (accept).
    """
    loss = np.asarray(loss, dtype=np.uint8)
    n = len(loss)
    stride = m + 2
    s_idx = np.arange(start, start + samples, dtype=np.uint64)
    rb = np.ones(samples)
    found = np.full(samples, -1, dtype=np.int64)
    for g in range(q):
        base = (s_idx * np.uint64(q) + np.uint64(g)) * np.uint64(stride)
        pos = _bounded(splitmix64(key, base[:, None] + np.arange(m, dtype=np.uint64)[None, :]), n)
        pos = pos.astype(np.int64)
        marked = loss[pos].astype(bool)
        t = marked.sum(axis=1)
        p = psucc[t]
        rb *= 1.0 - p
        hit = _unit(splitmix64(key, base + np.uint64(m))) < p
        pick = _bounded(splitmix64(key, base + np.uint64(m + 1)), t).astype(np.int64)
        # the pick-th marked slot of the group
        order = np.cumsum(marked, axis=1) - 1
        slot = np.argmax(marked & (order == pick[:, None]), axis=1)
        chosen = pos[np.arange(samples), slot]
        new = hit & (found < 0)
        found[new] = chosen[new]
    return rb, found
