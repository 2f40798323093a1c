"""Randomized inequality battery for the distance and entropy facts.

Every check draws seeded random instances and compares a left-hand side with
a right-hand side, either as ``lhs <= rhs`` or ``lhs == rhs``, at a relative
tolerance ``tol * max(1, |rhs|)``.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from itertools import product
from typing import Callable

import numpy as np

from ..qmat import (
    LabeledState,
    partial_trace,
    random_density,
    random_isometry,
    random_pure,
    random_unitary,
)
from . import measures as m
from .rounding import random_cq_purification, strategy_rounding

DEFAULT_TOL = 1e-7


@dataclass
class CheckResult:
    name: str
    relation: str
    cases: int
    violations: int
    worst_slack: float  # min over cases of (rhs - lhs), or -max|lhs-rhs| for equalities
    seconds: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _dims(rng, lo=2, hi=4):
    return int(rng.integers(lo, hi + 1))


def _chain(rng, d, length):
    """A chain of nearby states (random walk) or a pure geodesic with jitter."""
    if rng.random() < 0.5:
        rho = random_density(d, rng)
        out = [rho]
        for _ in range(length - 1):
            t = rng.uniform(0, 0.3)
            out.append((1 - t) * out[-1] + t * random_density(d, rng))
        return out
    a, b = random_pure(d, rng), random_pure(d, rng)
    b = b - np.vdot(a, b) * a
    b /= np.linalg.norm(b)
    step = rng.uniform(0, np.pi / (2 * length))
    out = []
    for i in range(length):
        v = np.cos(i * step) * a + np.sin(i * step) * b
        eps = rng.uniform(0, 1e-3)
        out.append((1 - eps) * np.outer(v, v.conj()) + eps * np.eye(d) / d)
    return out


def check_triangle(rng):
    n = int(rng.integers(2, 5))
    d = _dims(rng)
    states = _chain(rng, d, n + 1)
    lhs = m.bures_sq(states[0], states[-1])
    rhs = n * sum(m.bures_sq(states[i], states[i + 1]) for i in range(n))
    return lhs, rhs


def random_channel(d_in, d_out, rng):
    """Stinespring: Haar isometry into out x env, then trace the environment."""
    d_env = int(rng.integers(-(-d_in // d_out), 5))
    v = random_isometry(d_in, d_out * d_env, rng)

    def apply(rho):
        big = v @ rho @ v.conj().T
        return np.einsum("iaja->ij", big.reshape(d_out, d_env, d_out, d_env))

    return apply


def check_contractivity(rng):
    d_in, d_out = _dims(rng), _dims(rng)
    rho, sigma = random_density(d_in, rng), random_density(d_in, rng)
    if rng.random() < 0.5:
        sigma = 0.8 * rho + 0.2 * sigma
    chan = random_channel(d_in, d_out, rng)
    return m.bures_sq(chan(rho), chan(sigma)), m.bures_sq(rho, sigma)


def check_unitary_invariance(rng):
    d = _dims(rng)
    rho, sigma = random_density(d, rng), random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    u = random_unitary(d, rng)
    return m.bures_sq(u @ rho @ u.conj().T, u @ sigma @ u.conj().T), m.bures_sq(rho, sigma)


def check_convexity(rng):
    d, n = _dims(rng), int(rng.integers(2, 5))
    p = rng.dirichlet(np.ones(n))
    a = [random_density(d, rng) for _ in range(n)]
    b = [0.7 * a[i] + 0.3 * random_density(d, rng) for i in range(n)]
    lhs = m.bures_sq(sum(pi * ai for pi, ai in zip(p, a)), sum(pi * bi for pi, bi in zip(p, b)))
    rhs = sum(pi * m.bures_sq(ai, bi) for pi, ai, bi in zip(p, a, b))
    return lhs, rhs


def _block(p, blocks):
    n, d = len(blocks), blocks[0].shape[0]
    out = np.zeros((n * d, n * d), dtype=complex)
    for i, (pi, b) in enumerate(zip(p, blocks)):
        out[i * d:(i + 1) * d, i * d:(i + 1) * d] = pi * b
    return out


def check_cq_equality(rng):
    d, n = _dims(rng), int(rng.integers(2, 5))
    p = rng.dirichlet(np.ones(n))
    a = [random_density(d, rng) for _ in range(n)]
    b = [random_density(d, rng) for _ in range(n)]
    lhs = m.bures_sq(_block(p, a), _block(p, b))
    rhs = sum(pi * m.bures_sq(ai, bi) for pi, ai, bi in zip(p, a, b))
    return lhs, rhs


def check_divergence_dominates_bures(rng):
    d = _dims(rng)
    rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    sigma = random_density(d, rng)
    if rng.random() < 0.5:
        sigma = 0.9 * rho + 0.1 * sigma
    return m.bures_sq(rho, sigma), m.relative_entropy(rho, sigma)


def check_average_divergence(rng):
    d, n = _dims(rng), int(rng.integers(2, 5))
    p = rng.dirichlet(np.ones(n))
    blocks = [random_density(d, rng, rank=int(rng.integers(1, d + 1))) for _ in range(n)]
    state = LabeledState.mixed([("X", n), ("A", d)], _block(p, blocks))
    avg = sum(p[i] for i in range(n))  # normalization guard
    rho_a = sum(p[i] * blocks[i] for i in range(n)) / avg
    lhs = m.mutual_information(state, ["X"], ["A"])
    rhs = sum(p[i] * m.relative_entropy(blocks[i], rho_a) for i in range(n))
    return lhs, rhs


def _bipartite(rng):
    da, db = _dims(rng, 2, 3), _dims(rng, 2, 3)
    rho = random_density(da * db, rng, rank=int(rng.integers(1, da * db + 1)))
    sigma = random_density(da * db, rng)
    if rng.random() < 0.5:
        sigma = 0.6 * rho + 0.4 * sigma
    layout = [("X", da), ("Y", db)]
    return LabeledState.mixed(layout, rho), LabeledState.mixed(layout, sigma)


def check_divergence_monotone(rng):
    rho, sigma = _bipartite(rng)
    lhs = m.relative_entropy(partial_trace(rho, ["X"]).data, partial_trace(sigma, ["X"]).data)
    return lhs, m.relative_entropy(rho.data, sigma.data)


def check_divergence_split(rng):
    rho, sigma = _bipartite(rng)
    sx, sy = partial_trace(sigma, ["X"]).data, partial_trace(sigma, ["Y"]).data
    lhs = (m.relative_entropy(partial_trace(rho, ["X"]).data, sx)
           + m.relative_entropy(partial_trace(rho, ["Y"]).data, sy))
    return lhs, m.relative_entropy(rho.data, np.kron(sx, sy))


def check_divergence_chain_rule(rng):
    d, n = _dims(rng), int(rng.integers(2, 5))
    mu, mu1 = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
    rhos = [random_density(d, rng) for _ in range(n)]
    rhos1 = [random_density(d, rng, rank=int(rng.integers(1, d + 1))) for _ in range(n)]
    lhs = m.relative_entropy(_block(mu1, rhos1), _block(mu, rhos))
    rhs = m.classical_relative_entropy(mu1, mu) + sum(
        mu1[i] * m.relative_entropy(rhos1[i], rhos[i]) for i in range(n))
    return lhs, rhs


def check_max_divergence_mixture(rng):
    d = _dims(rng)
    p = rng.uniform(0.01, 1.0)
    rho0 = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    rho1 = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    return m.relative_min_entropy(rho0, p * rho0 + (1 - p) * rho1), math.log2(1 / p)


def check_min_entropy_monotone(rng):
    rho, sigma = _bipartite(rng)
    lhs = m.relative_min_entropy(partial_trace(rho, ["X"]).data, partial_trace(sigma, ["X"]).data)
    return lhs, m.relative_min_entropy(rho.data, sigma.data)


def check_min_entropy_chain(rng):
    d = _dims(rng)
    rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    sigma = 0.5 * rho + 0.5 * random_density(d, rng)
    tau = 0.5 * sigma + 0.5 * random_density(d, rng)
    lhs = m.relative_min_entropy(rho, tau)
    return lhs, m.relative_min_entropy(rho, sigma) + m.relative_min_entropy(sigma, tau)


def check_mixed_chain(rng):
    d = _dims(rng)
    rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    sigma = random_density(d, rng)
    if rng.random() < 0.5:
        sigma = 0.5 * rho + 0.5 * sigma
    tau = rng.uniform(0.05, 0.95) * sigma + 0.5 * random_density(d, rng)
    tau /= np.trace(tau).real
    lhs = m.relative_entropy(rho, tau)
    return lhs, m.relative_entropy(rho, sigma) + m.relative_min_entropy(sigma, tau)


def _binary_pair(rng):
    if rng.random() < 0.5:
        p = rng.uniform(0, 0.05) ** 2
    else:
        p = rng.uniform(0, 1)
    q = rng.uniform(0, 1) if rng.random() < 0.5 else rng.uniform(0, 0.2)
    return p, q


def check_binary_divergence_bound(rng):
    p, q = _binary_pair(rng)
    s = m.classical_relative_entropy([p, 1 - p], [q, 1 - q])
    # smallest delta meeting both hypotheses S <= delta and p < delta
    delta = max(s, math.nextafter(p, math.inf))
    return q, 4 * delta


def check_binary_bures_bound(rng):
    p, q = _binary_pair(rng)
    k = m.classical_bures_sq([p, 1 - p], [q, 1 - q])
    delta = max(k, math.nextafter(p, math.inf))
    return q, 4 * delta


SHARP_BINARY_BURES_CONSTANT = 3 + 2 * math.sqrt(2)


def check_binary_bures_sharp(rng):
    # small p, q: K ~ (sqrt q - sqrt p)^2 / 2, so q <= (1 + sqrt 2)^2 delta is tight
    p, q = _binary_pair(rng)
    k = m.classical_bures_sq([p, 1 - p], [q, 1 - q])
    delta = max(k, math.nextafter(p, math.inf))
    return q, SHARP_BINARY_BURES_CONSTANT * delta


def random_raz_pair(rng):
    """psi = (product classical X) x psi^A and phi = psi conditioned on a random event."""
    n = int(rng.integers(2, 4))
    xd = [int(rng.integers(2, 4)) for _ in range(n)]
    da = int(rng.integers(1, 4))
    mu = np.ones(1)
    for d in xd:
        mu = np.kron(mu, rng.dirichlet(np.ones(d)))
    psi_a = random_density(da, rng)
    dx = int(np.prod(xd))
    psi = np.kron(np.diag(mu), psi_a)
    kind = rng.random()
    blocks = []
    for x in range(dx):
        if kind < 0.3:
            e = np.eye(da) * float(rng.random() < 0.4 + 0.2 * rng.random())
        else:
            g = random_density(da, rng, rank=int(rng.integers(1, da + 1)))
            e = g / np.linalg.eigvalsh(g)[-1] * rng.uniform(0, 1)
        w, v = np.linalg.eigh(e)
        sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
        blocks.append(mu[x] * sq @ psi_a @ sq)
    phi = _block(np.ones(dx), blocks)
    lam = np.trace(phi).real
    if lam <= 1e-12:
        phi = psi.copy()
        lam = 1.0
    phi /= lam
    regs = [(f"X{i}", d) for i, d in enumerate(xd)] + [("A", da)]
    return LabeledState.mixed(regs, phi), LabeledState.mixed(regs, psi), [f"X{i}" for i in range(n)], lam


def check_raz(rng):
    phi, psi, coords, _ = random_raz_pair(rng)
    return m.raz_check(phi, psi, coords, ["A"])


def check_mixture_bures(rng):
    na, d = int(rng.integers(2, 5)), _dims(rng)
    vecs = [random_pure(d, rng) for _ in range(na)]
    mu, tau = rng.dirichlet(np.ones(na)), rng.dirichlet(np.ones(na))
    if rng.random() < 0.5:
        tau = 0.8 * mu + 0.2 * tau
    a = sum(mu[i] * np.outer(vecs[i], vecs[i].conj()) for i in range(na))
    b = sum(tau[i] * np.outer(vecs[i], vecs[i].conj()) for i in range(na))
    return m.bures_sq(a, b), m.classical_relative_entropy(mu, tau)


def check_single_rounding(rng):
    xd, ad, bd = _dims(rng, 2, 3), _dims(rng, 1, 2), _dims(rng, 2, 3)
    phi = random_cq_purification(1, [xd], [ad], bd, rng)
    res = strategy_rounding(phi, ["X0"], [["X0", "Xp0", "A0"]])
    return res.expected_gap, m.mutual_information(phi, ["X0"], ["B"])


CHECKS: dict[str, tuple[str, Callable]] = {
    "bures_triangle": ("le", check_triangle),
    "bures_contractivity": ("le", check_contractivity),
    "bures_unitary_invariance": ("eq", check_unitary_invariance),
    "bures_convexity": ("le", check_convexity),
    "bures_cq_equality": ("eq", check_cq_equality),
    "divergence_dominates_bures": ("le", check_divergence_dominates_bures),
    "average_divergence_identity": ("eq", check_average_divergence),
    "divergence_monotone": ("le", check_divergence_monotone),
    "divergence_split": ("le", check_divergence_split),
    "divergence_chain_rule": ("eq", check_divergence_chain_rule),
    "max_divergence_mixture": ("le", check_max_divergence_mixture),
    "min_entropy_monotone": ("le", check_min_entropy_monotone),
    "min_entropy_chain": ("le", check_min_entropy_chain),
    "divergence_min_entropy_chain": ("le", check_mixed_chain),
    "binary_divergence_bound": ("le", check_binary_divergence_bound),
    "binary_bures_bound": ("le", check_binary_bures_bound),
    "binary_bures_sharp_constant": ("le", check_binary_bures_sharp),
    "quantum_raz": ("le", check_raz),
    "mixture_bures_vs_divergence": ("le", check_mixture_bures),
    "single_player_rounding": ("le", check_single_rounding),
}


def run_check(name: str, cases: int, seed: int, tol: float = DEFAULT_TOL) -> CheckResult:
    relation, fn = CHECKS[name]
    # per-check stream so adding checks never shifts another check's instances
    rng = np.random.default_rng(np.random.SeedSequence([seed, _stable_hash(name)]))
    violations, worst = 0, math.inf
    start = time.perf_counter()
    for _ in range(cases):
        lhs, rhs = fn(rng)
        scale = max(1.0, abs(rhs)) if math.isfinite(rhs) else 1.0
        if relation == "le":
            slack = rhs - lhs if math.isfinite(rhs) else math.inf
            bad = lhs > rhs + tol * scale
        else:
            slack = -abs(lhs - rhs) if math.isfinite(lhs) or math.isfinite(rhs) else 0.0
            bad = not (abs(lhs - rhs) <= tol * scale or lhs == rhs)
        violations += int(bad)
        worst = min(worst, slack)
    return CheckResult(name, relation, cases, violations, worst, time.perf_counter() - start)


def _stable_hash(name: str) -> int:
    return int.from_bytes(name.encode()[:16].ljust(16, b"\0"), "little") % (2**63)


def run_battery(cases: int = 1000, seed: int = 0, tol: float = DEFAULT_TOL,
                names=None) -> list[CheckResult]:
    names = list(CHECKS) if names is None else list(names)
    return [run_check(n, cases, seed, tol) for n in names]


def battery_report(results: list[CheckResult]) -> dict:
    return {
        "checks": [asdict(r) for r in results],
        "total_cases": sum(r.cases for r in results),
        "violations": sum(r.violations for r in results),
    }
