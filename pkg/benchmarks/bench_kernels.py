"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeats 3]

Each case runs on both implementations, checks the results agree
bit-for-bit, and prints the best wall time of each and the speed-up.
"""
import argparse
import sys
import time

import numpy as np

from repval import _backend, _fallback
from repval.games import build_agreement_game, Game
from repval.search import SearchConfig, _key, success_table
from repval.values import bruteforce_weights

try:
    from repval import _kernels
except ImportError:
    sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation` first")


def _best(fn, repeats):
    out, best = None, float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return out, best


def bruteforce_case(g: Game):
    w2, total = bruteforce_weights(g)

    def run(impl):
        return lambda: _backend.bruteforce(w2, g.inputs[1:], g.outputs[1:], total, impl=impl)
    return f"bruteforce {g.name or 'game'} ({total:,} candidates)", run


def search_case(samples):
    cfg = SearchConfig.create(200, 0.1, 0.5, q=10)
    loss = np.zeros(cfg.n, dtype=np.uint8)
    loss[::10] = 1
    psucc = success_table(cfg.m)
    key = _key(0, 1)

    def run(impl):
        return lambda: _backend.search_mc(loss, psucc, cfg.q, cfg.m, samples, key, impl=impl)
    return f"search MC ({samples:,} samples)", run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    threshold = Game.from_function((3, 3), (2, 2), [np.ones(3) / 3] * 2,
                                lambda x, a: (a[0] ^ a[1]) == int(x[0] + x[1] >= 2), "threshold_3x3")
    table = np.random.default_rng(5).random((4, 12, 2, 3)) < 0.4
    wide = Game.from_table((4, 12), (2, 3), [np.ones(4) / 4, np.ones(12) / 12], table, "random_4x12")
    cases = [bruteforce_case(build_agreement_game(2)), bruteforce_case(threshold),
             bruteforce_case(build_agreement_game(3)), bruteforce_case(wide), search_case(20_000), search_case(200_000)]
    print(f"{'case':44s} {'cython s':>10s} {'python s':>10s} {'speed-up':>9s}  identical")
    for label, run in cases:
        fast, tf = _best(run(_kernels), args.repeats)
        slow, ts = _best(run(_fallback), max(1, args.repeats // 2))
        if isinstance(fast, tuple) and isinstance(fast[0], np.ndarray):
            same = all(np.array_equal(a, b) for a, b in zip(fast, slow))
        else:
            same = fast == slow
        print(f"{label:44s} {tf:10.4f} {ts:10.4f} {ts / tf:8.1f}x  {same}")


if __name__ == "__main__":
    main()
