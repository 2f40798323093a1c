"""Distributed losing-coordinate search: group Grover search and its accounting.

A verifier samples ``h = q*m`` coordinates with replacement, splits them
into ``q`` groups of ``m`` and runs an unknown-count Grover search on each
group. An index returned by the search is checked classically before it is
reported, so a string with no losing coordinate is always accepted.

Group search schedule (BBHT style): round ``r`` draws ``j`` uniformly from
``{0, ..., M_r - 1}`` with ``M_r = min(ceil(1.2**r), ceil(sqrt m))``, runs
``j`` Grover iterations and measures, then spends one more query verifying
the measured index. A round therefore costs ``j + 1`` queries. Rounds stop
at a total budget of ``floor(2 sqrt m)`` queries (the last draw is
truncated to fit the budget).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _backend
from ._fallback import _bounded, splitmix64
from .errors import InvariantViolation

GROWTH = 1.2
BUDGET_FACTOR = 2.0
DEFAULT_C_PRIME = 3.0


@dataclass(frozen=True)
class SearchConfig:
    n: int
    eps_prime: float
    eta: float
    m: int
    q: int
    c_prime: float
    answer_bits: int
    index_bits: int

    @classmethod
    def create(cls, n: int, eps_prime: float, eta: float, c_prime: float = DEFAULT_C_PRIME,
               q: int | None = None, answer_bits: int = 1, index_bits: int | None = None):
        if not 0 < eps_prime < 1:
            raise InvariantViolation("eps_prime must lie in (0, 1)")
        if not 0 < eta < 1:
            raise InvariantViolation("eta must lie in (0, 1)")
        if n < 1:
            raise InvariantViolation("n must be positive")
        m = math.ceil(1 / eps_prime)
        if q is None:
            h = math.ceil(c_prime * math.log2(1 / eta) / eps_prime)
            q = max(1, math.ceil(h / m))
        if q < 1:
            raise InvariantViolation("q must be >= 1")
        if index_bits is None:
            index_bits = math.ceil(math.log2(n)) if n > 1 else 0
        return cls(int(n), float(eps_prime), float(eta), m, int(q), float(c_prime),
                   int(answer_bits), int(index_bits))

    @property
    def h(self) -> int:
        return self.q * self.m

    @property
    def bound(self) -> float:
        """Acceptance bound (1/3 + 1/e)^q for losing fraction >= eps_prime."""
        return (1 / 3 + 1 / math.e) ** self.q

    def to_json(self) -> dict:
        return {"n": self.n, "eps_prime": self.eps_prime, "eta": self.eta, "m": self.m,
                "q": self.q, "h": self.h, "c_prime": self.c_prime,
                "answer_bits": self.answer_bits, "index_bits": self.index_bits}


@dataclass
class SearchOutcome:
    accept_prob: float
    std_error: float
    ci: tuple[float, float]
    found_index: int | None
    qubits_exchanged: int
    mode: str
    samples: int
    rejects: int = 0
    expected_qubits: float = 0.0
    found_counts: dict[int, int] = field(default_factory=dict)

    def to_json(self, cfg: SearchConfig) -> dict:
        return {"accept_prob": self.accept_prob, "std_error": self.std_error,
                "ci": list(self.ci), "q": cfg.q, "m": cfg.m, "T": self.qubits_exchanged,
                "expected_T": self.expected_qubits, "bound": cfg.bound, "mode": self.mode,
                "samples": self.samples, "rejects": self.rejects,
                "found_index": self.found_index,
                "found_counts": {str(k): v for k, v in sorted(self.found_counts.items())}}


# --------------------------------------------------------------------------
# schedule and single-group probabilities


@lru_cache(maxsize=None)
def schedule(m: int) -> tuple[tuple[int, ...], int]:
    """(draw ranges M_r per round, query budget)."""
    if m < 1:
        raise InvariantViolation("group size must be >= 1")
    budget = max(1, int(math.floor(BUDGET_FACTOR * math.sqrt(m))))
    cap = math.ceil(math.sqrt(m))
    return tuple(min(math.ceil(GROWTH ** r), cap) for r in range(budget)), budget


def _grover_2d(m: int, t: int, j: int) -> float:
    """Marked-subspace probability after j iterations, on the invariant plane."""
    if t == 0:
        return 0.0
    if t == m:
        return 1.0
    s = np.array([math.sqrt(t / m), math.sqrt(1 - t / m)])  # (marked, unmarked)
    oracle = np.diag([-1.0, 1.0])
    diffusion = 2 * np.outer(s, s) - np.eye(2)
    v = s.copy()
    for _ in range(j):
        v = diffusion @ (oracle @ v)
    return float(min(1.0, v[0] ** 2))


def grover_amplitudes(marked, j: int) -> np.ndarray:
    """Full m-dimensional amplitude vector after j Grover iterations."""
    marked = np.asarray(marked, dtype=bool)
    m = marked.size
    v = np.full(m, 1 / math.sqrt(m))
    sign = np.where(marked, -1.0, 1.0)
    for _ in range(j):
        v = sign * v
        v = 2 * v.mean() - v
    return v


def iteration_success(marked, j: int, method: str = "2d") -> float:
    """Probability that measuring after j iterations yields a marked index."""
    marked = np.asarray(marked, dtype=bool)
    if method == "2d":
        return _grover_2d(marked.size, int(marked.sum()), j)
    if method == "full":
        return float(min(1.0, np.sum(grover_amplitudes(marked, j)[marked] ** 2)))
    raise InvariantViolation(f"unknown method {method!r}")


def _schedule_dp(m: int, p_of_j):
    """(success probability, expected queries) averaged over the schedule."""
    draws, budget = schedule(m)
    alive = {0: 1.0}  # queries spent -> probability of no success yet
    success = 0.0
    expected = 0.0
    for big_m in draws:
        nxt: dict[int, float] = {}
        for spent, p in alive.items():
            if spent >= budget:
                nxt[spent] = nxt.get(spent, 0.0) + p
                continue
            for j in range(big_m):
                jj = min(j, budget - spent - 1)
                ps = p_of_j(jj)
                w = p / big_m
                cost = jj + 1
                success += w * ps
                expected += w * cost
                nxt[spent + cost] = nxt.get(spent + cost, 0.0) + w * (1 - ps)
        alive = nxt
    return success, expected


@lru_cache(maxsize=None)
def _success_table(m: int) -> tuple[np.ndarray, np.ndarray]:
    p = np.zeros(m + 1)
    cost = np.zeros(m + 1)
    for t in range(m + 1):
        p[t], cost[t] = _schedule_dp(m, lambda j, t=t: _grover_2d(m, t, j))
    p[0] = 0.0
    return p, cost


def success_table(m: int) -> np.ndarray:
    """P[t]: group search success probability with t marked out of m."""
    return _success_table(m)[0].copy()


def expected_queries(m: int) -> np.ndarray:
    """Expected queries of a run that stops at its first verified hit,
    indexed by the marked count."""
    return _success_table(m)[1].copy()


def grover_group_search_prob(marked, seed: int | None = None, method: str = "2d") -> float:
    """Success probability of the group search on ``marked``.

    Without a seed the schedule randomness is averaged exactly. With a seed
    one realization of the iteration counts is drawn and the exact success
    probability of that realization is returned.
    """
    marked = np.asarray(marked, dtype=bool)
    m = marked.size
    if m < 1:
        raise InvariantViolation("group size must be >= 1")
    if not marked.any():
        return 0.0
    cache: dict[int, float] = {}

    def p_of_j(j):
        if j not in cache:
            cache[j] = iteration_success(marked, j, method)
        return cache[j]

    if seed is None:
        return float(_schedule_dp(m, p_of_j)[0])
    fail = 1.0
    for j in sample_schedule(m, seed):
        fail *= 1 - p_of_j(j)
    return 1 - fail


def sample_schedule(m: int, seed: int) -> list[int]:
    """One realization of the per-round iteration counts (budget-truncated)."""
    draws, budget = schedule(m)
    z = splitmix64(_key(seed, 0x5C4ED), np.arange(len(draws), dtype=np.uint64))
    out, spent = [], 0
    for big_m, zi in zip(draws, z):
        if spent >= budget:
            break
        j = min(int(_bounded(zi, big_m)), budget - spent - 1)
        out.append(j)
        spent += j + 1
    return out


def schedule_steps(m: int, seed: int) -> int:
    """Queries used by one full schedule realization."""
    return sum(j + 1 for j in sample_schedule(m, seed))


# --------------------------------------------------------------------------
# protocol


def comm_cost(cfg: SearchConfig, grover_steps_per_group: int) -> int:
    """Qubits exchanged: each query sends an index and returns an answer, both ways."""
    return 2 * cfg.q * int(grover_steps_per_group) * (cfg.answer_bits + cfg.index_bits)


def _key(seed: int, salt: int) -> int:
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, salt]).generate_state(1, np.uint64)[0])


def single_group_acceptance(fraction: float, m: int) -> float:
    """Exact acceptance of one group when each sample loses with prob ``fraction``."""
    p = success_table(m)
    terms = [math.comb(m, t) * fraction ** t * (1 - fraction) ** (m - t) * (1 - p[t])
             for t in range(m + 1)]
    return math.fsum(terms)


def exact_acceptance(loss, cfg: SearchConfig) -> float:
    """Sum over sampled multisets of the acceptance amplitude squared.

    Groups are i.i.d., so this is the single-group acceptance to the power q.
    """
    loss = np.asarray(loss, dtype=bool)
    if not loss.any():
        return 1.0
    return single_group_acceptance(float(loss.mean()), cfg.m) ** cfg.q


def enumerate_group_acceptance(loss, m: int) -> float:
    """Single-group acceptance by listing every ordered group (tiny cases)."""
    loss = np.asarray(loss, dtype=np.int64)
    n = loss.size
    if n ** m > 2_000_000:
        raise InvariantViolation("too many groups to enumerate")
    p = success_table(m)
    counts = np.zeros(1, dtype=np.int64)
    for _ in range(m):
        counts = (counts[:, None] + loss[None, :]).reshape(-1)
    return math.fsum((1 - p[counts]).tolist()) / n ** m


def protocol_run(loss_indicator, cfg: SearchConfig, samples: int = 10_000, seed: int = 0,
                 mode: str = "mc", threads: int = 1) -> SearchOutcome:
    loss = np.asarray(loss_indicator, dtype=np.uint8)
    if loss.ndim != 1 or loss.size != cfg.n:
        raise InvariantViolation(f"loss indicator must have length n = {cfg.n}")
    if cfg.h > cfg.n:
        raise InvariantViolation(f"sample count h = {cfg.h} exceeds n = {cfg.n}")
    budget = schedule(cfg.m)[1]
    worst_t = comm_cost(cfg, budget)
    if mode == "exact":
        acc = exact_acceptance(loss, cfg)
        frac = float(loss.mean())
        costs = expected_queries(cfg.m)
        ecost = math.fsum(math.comb(cfg.m, t) * frac ** t * (1 - frac) ** (cfg.m - t) * costs[t]
                          for t in range(cfg.m + 1))
        return SearchOutcome(acc, 0.0, (acc, acc), None, worst_t, "exact", 0,
                             expected_qubits=2 * cfg.q * ecost * (cfg.answer_bits + cfg.index_bits))
    if mode != "mc":
        raise InvariantViolation(f"unknown mode {mode!r}")
    if samples < 1:
        raise InvariantViolation("samples must be >= 1")
    p = success_table(cfg.m)
    rb, found = _backend.search_mc(loss, p, cfg.q, cfg.m, samples, _key(seed, 0x5EA6C), threads)
    hits = found[found >= 0]
    if hits.size and not loss[hits].all():
        raise InvariantViolation("a winning coordinate was reported as losing")
    mean = math.fsum(rb.tolist()) / samples
    var = math.fsum(((rb - mean) ** 2).tolist()) / max(1, samples - 1)
    se = math.sqrt(var / samples)
    idx, cnt = np.unique(hits, return_counts=True)
    costs = expected_queries(cfg.m)
    frac = float(loss.mean())
    ecost = math.fsum(math.comb(cfg.m, t) * frac ** t * (1 - frac) ** (cfg.m - t) * costs[t]
                      for t in range(cfg.m + 1))
    return SearchOutcome(
        accept_prob=mean, std_error=se,
        ci=(max(0.0, mean - 1.96 * se), min(1.0, mean + 1.96 * se)),
        found_index=int(found[0]) if found[0] >= 0 else None,
        qubits_exchanged=worst_t, mode="mc", samples=samples, rejects=int(hits.size),
        expected_qubits=2 * cfg.q * ecost * (cfg.answer_bits + cfg.index_bits),
        found_counts={int(i): int(c) for i, c in zip(idx, cnt)},
    )
