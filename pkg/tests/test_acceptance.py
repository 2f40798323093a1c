"""Acceptance suite: one test per criterion, one PASS/FAIL line per criterion.

The lines are printed as each test finishes and repeated in the terminal
summary. Run standalone with ``python3 tests/test_acceptance.py``.

Two criteria cannot be met as stated and are marked strict xfail, so they
fail visibly while the rest of the run stays green:

* the two-player agreement game has non-signaling value 2/3, not 1/2;
* the binary-distribution Bures bound with constant 4 has counterexamples
  (the sharp constant is 3 + 2*sqrt(2)).
"""
import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from repval import advice
from repval.games import (
    agreement_repeated_strategy,
    build_agreement_game,
    game_from_json,
    load_json,
    repeat,
)
from repval.qit import mutual_information, strategy_rounding
from repval.qit.battery import CHECKS, run_battery
from repval.qit.rounding import random_cq_purification
from repval.search import SearchConfig, protocol_run, success_table
from repval.values import (
    classical_value_bruteforce,
    evaluate_classical,
    evaluate_quantum_strategy,
    ns_value_lp,
    seesaw_lower_bound,
)

from conftest import CORPUS

RESULTS: dict[int, str] = {}


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


# ---------------------------------------------------------------- 1


def _counterexample(k):
    start = time.perf_counter()
    g = build_agreement_game(k)
    c = classical_value_bruteforce(g).value
    ns = ns_value_lp(g).value
    rep = evaluate_classical(repeat(g, k), agreement_repeated_strategy(k))
    return c, ns, rep, time.perf_counter() - start


@pytest.mark.xfail(strict=True, reason="two-player agreement game: non-signaling value is 2/3")
def test_criterion_1_counterexample():
    parts, ok = [], True
    for k in (2, 3):
        c, ns, rep, secs = _counterexample(k)
        assert c == 0.5 and rep == 0.5 and secs < 10  # the attainable parts hold for both k
        ok &= abs(ns - 0.5) <= 1e-6
        parts.append(f"k={k}: classical={c} ns={ns:.6f} repeated={rep} ({secs:.2f}s)")
    record(1, ok, "; ".join(parts))
    assert ok


# ---------------------------------------------------------------- 2


@pytest.mark.xfail(strict=True, reason="binary Bures bound with constant 4 has counterexamples")
def test_criterion_2_qit_battery():
    start = time.perf_counter()
    results = run_battery(cases=1000, seed=7)
    secs = time.perf_counter() - start
    bad = {r.name: r.violations for r in results if r.violations}
    assert secs < 300
    assert set(bad) <= {"binary_bures_bound"}  # every other fact holds on all 1000 cases
    assert all(r.cases == 1000 for r in results) and len(results) == len(CHECKS)
    record(2, not bad, f"{len(results)} facts x 1000 cases, violations={bad or 0} ({secs:.1f}s)")
    assert not bad


# ---------------------------------------------------------------- 3


def test_criterion_3_strategy_rounding():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst_single, worst_multi, cases = -math.inf, -math.inf, 0
    for _ in range(100):
        xd, ad, bd = int(rng.integers(2, 5)), int(rng.integers(1, 3)), int(rng.integers(2, 5))
        phi = random_cq_purification(1, [xd], [ad], bd, rng)
        rr = strategy_rounding(phi, ["X0"], [["X0", "Xp0", "A0"]])
        worst_single = max(worst_single, rr.expected_gap - mutual_information(phi, ["X0"], ["B"]))
        cases += 1
    for k in (2, 3):
        for _ in range(50):
            dims = [int(rng.integers(2, 3 if k == 3 else 4)) for _ in range(k)]
            phi = random_cq_purification(k, dims, [2] * k, 2, rng, product_inputs=bool(rng.random() < 0.5))
            rr = strategy_rounding(phi, [f"X{j}" for j in range(k)],
                                   [[f"X{j}", f"Xp{j}", f"A{j}"] for j in range(k)])
            worst_multi = max(worst_multi, rr.expected_gap - rr.bound)
            cases += 1
    secs = time.perf_counter() - start
    ok = worst_single <= 1e-7 and worst_multi <= 1e-6 and secs < 300
    record(3, ok, f"{cases} CQ states; max(gap - I)={worst_single:.3g}, "
                  f"max(gap - 4k sum I)={worst_multi:.3g} ({secs:.1f}s)")
    assert ok


# ---------------------------------------------------------------- 4


def test_criterion_4_advice_enactment():
    start = time.perf_counter()
    g = game_from_json(load_json(os.path.join(CORPUS, "chsh.json")))
    q = seesaw_lower_bound(g, (2, 2), restarts=5, seed=0)
    assert 0.7 < q.value < 0.95
    s2 = q.witness.repeat(2)
    psi = advice.build_psi0(g, 2, s2)
    phi = advice.condition_win_all(psi)
    direct = evaluate_quantum_strategy(repeat(g, 2), s2)
    props = advice.measure_properties(phi)
    rounds = [advice.round_and_play(phi, i) for i in range(2)]
    secs = time.perf_counter() - start
    lam_ok = abs(phi.lam - direct) <= 1e-8
    div_ok = sum(props.divergences) <= props.log_inv_lambda + 1e-7
    chain_ok = all(r.k_f0_f1 <= r.expected_gap + 1e-6 and r.expected_gap <= r.rounding_bound + 1e-6
                   for r in rounds)
    kappa_ok = all(r.kappa >= r.pr_f0 - 4 * r.k_f0_f1 - 4 * props.divergences[i] - 1e-6
                   for i, r in enumerate(rounds))
    ok = lam_ok and div_ok and chain_ok and kappa_ok and secs < 120
    r0 = rounds[0]
    record(4, ok, f"val*={q.value:.6f} lambda={phi.lam:.10f} direct={direct:.10f} "
                  f"sum S={sum(props.divergences):.3g}<=log(1/lambda)={props.log_inv_lambda:.4f} "
                  f"K(F0,F1)={r0.k_f0_f1:.3f} E K={r0.expected_gap:.3f} bound={r0.rounding_bound:.2f} "
                  f"kappa={r0.kappa:.3f}>=floor={r0.kappa_floor:.3f} ({secs:.1f}s)")
    assert ok


# ---------------------------------------------------------------- 5


def test_criterion_5_search_protocol():
    start = time.perf_counter()
    cfg = SearchConfig.create(200, 0.1, 0.5, q=10)
    winning = protocol_run(np.zeros(200), cfg, samples=10_000, seed=1)
    loss = np.zeros(200)
    loss[::10] = 1
    losing = protocol_run(loss, cfg, samples=100_000, seed=2)
    bound = (1 / 3 + 1 / math.e) ** 10
    group_min = min(success_table(m)[1:].min() for m in range(1, 65))
    ref = cfg.q * math.sqrt(cfg.m) * (cfg.answer_bits + cfg.index_bits)
    ratio = winning.qubits_exchanged / ref
    secs = time.perf_counter() - start
    checks = {
        "all_winning_accepted": winning.accept_prob == 1.0 and winning.rejects == 0,
        "losing_below_bound": losing.accept_prob <= bound + 3 * losing.std_error,
        "group_success": group_min >= 2 / 3,
        "comm_within_4x": 0.25 <= ratio <= 4,
    }
    ok = all(checks.values()) and secs < 180
    record(5, ok, f"accept(all win)={winning.accept_prob} rejects={winning.rejects}; "
                  f"accept(10% losing)={losing.accept_prob:.3g}+-{losing.std_error:.2g} <= {bound:.3g}; "
                  f"min group success={group_min:.4f}; T/ref={ratio:.2f} ({secs:.1f}s)")
    assert ok, checks


# ---------------------------------------------------------------- 6


def test_criterion_6_protocol_c():
    start = time.perf_counter()
    g = build_agreement_game(2)
    s = agreement_repeated_strategy(2)
    results = [advice.protocol_c_classical(g, 2, s, c, exact=True) for c in ([0], [1])]
    secs = time.perf_counter() - start
    ok = secs < 30 and all(
        r.factorization_error <= 1e-12 and r.conditional_factorization_error <= 1e-12
        and r.kappa >= r.omega - 4 * r.delta for r in results)
    record(6, ok, "; ".join(f"C={{{c}}}: omega={r.omega} kappa={r.kappa} delta={r.delta:.3g} "
                            f"factorization err={r.factorization_error:.1g}"
                            for c, r in zip((0, 1), results)) + f" ({secs:.2f}s)")
    assert ok


# ---------------------------------------------------------------- 7


def test_criterion_7_value_ordering():
    start = time.perf_counter()
    names = sorted(f[:-5] for f in os.listdir(CORPUS) if f.endswith(".json"))
    assert len(names) >= 10
    bad, chsh = [], None
    for name in names:
        g = game_from_json(load_json(os.path.join(CORPUS, name + ".json")))
        c = classical_value_bruteforce(g).value
        q = seesaw_lower_bound(g, (2,) * g.k, restarts=5, seed=0).value
        ns = ns_value_lp(g).value
        if not (c <= q + 1e-6 and q <= ns + 1e-6):
            bad.append(name)
        if name == "chsh":
            chsh = (c, q, ns)
    secs = time.perf_counter() - start
    chsh_ok = chsh is not None and chsh[0] == pytest.approx(0.75, abs=1e-9) and chsh[1] >= 0.8534 \
        and chsh[2] == pytest.approx(1.0, abs=1e-6)
    ok = not bad and chsh_ok and secs < 120
    record(7, ok, f"{len(names)} games ordered (violations: {bad or 'none'}); "
                  f"chsh=({chsh[0]:.4f}, {chsh[1]:.6f}, {chsh[2]:.4f}) ({secs:.1f}s)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
