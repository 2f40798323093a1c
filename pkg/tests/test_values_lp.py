import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from repval.errors import BudgetExceeded, InvariantViolation
from repval.games import ClassicalStrategy, Game, QuantumStrategy, build_agreement_game, repeat
from repval.lp import independent_rows, simplex_max
from repval.values import (
    classical_value_bruteforce,
    evaluate_classical,
    evaluate_quantum_strategy,
    ns_constraints,
    ns_value_lp,
    seesaw_lower_bound,
)

from conftest import chsh_seesaw, corpus_games


def _naive_classical(g: Game) -> float:
    best = 0.0
    spaces = [itertools.product(range(a), repeat=x) for x, a in zip(g.inputs, g.outputs)]
    for tables in itertools.product(*[list(s) for s in spaces]):
        best = max(best, evaluate_classical(g, ClassicalStrategy(tuple(np.array(t) for t in tables))))
    return best


def _random_game(rng, inputs=(2, 3), outputs=(2, 2), density=0.5):
    table = rng.random(inputs + outputs) < density
    mu = [rng.dirichlet(np.ones(d)) for d in inputs]
    return Game.from_table(inputs, outputs, mu, table)


# ---------------------------------------------------------------- classical

def test_chsh_classical(chsh):
    r = classical_value_bruteforce(chsh)
    assert r.value == 0.75
    assert evaluate_classical(chsh, r.witness) == r.value


def test_agreement_classical():
    assert classical_value_bruteforce(build_agreement_game(2)).value == 0.5


def test_all_accepting_and_all_rejecting():
    g = Game.from_function((2, 2), (2, 2), [[.5, .5], [.5, .5]], lambda x, a: True)
    assert classical_value_bruteforce(g).value == 1.0
    assert ns_value_lp(g).value == pytest.approx(1.0)
    s = QuantumStrategy.from_classical(g, ClassicalStrategy((np.zeros(2, int), np.zeros(2, int))))
    assert evaluate_quantum_strategy(g, s) == pytest.approx(1.0)
    lose = Game.from_function((2, 2), (2, 2), [[.5, .5], [.5, .5]], lambda x, a: False)
    assert evaluate_classical(lose, ClassicalStrategy((np.zeros(2, int), np.zeros(2, int)))) == 0.0


def test_bruteforce_matches_naive_enumeration(rng):
    for _ in range(10):
        g = _random_game(rng)
        assert classical_value_bruteforce(g).value == pytest.approx(_naive_classical(g), abs=1e-12)


def test_bruteforce_three_players_matches_naive(rng):
    g = _random_game(rng, (2, 2, 2), (2, 2, 2))
    assert classical_value_bruteforce(g).value == pytest.approx(_naive_classical(g), abs=1e-12)


def test_bruteforce_invariant_under_relabeling(rng):
    for _ in range(5):
        g = _random_game(rng, (3, 2), (3, 2))
        table = g.predicate_table().reshape(g.inputs + g.outputs)
        perm_a, perm_x = rng.permutation(3), rng.permutation(3)
        relabeled = table[perm_x][:, :, perm_a]
        mu = [g.mu_product[0][perm_x], g.mu_product[1]]
        h = Game.from_table(g.inputs, g.outputs, mu, relabeled)
        assert classical_value_bruteforce(h).value == pytest.approx(classical_value_bruteforce(g).value, abs=1e-12)


def test_bruteforce_threads_agree(rng):
    g = _random_game(rng, (3, 5), (2, 3))
    a, b = classical_value_bruteforce(g, threads=1), classical_value_bruteforce(g, threads=4)
    assert a.value == b.value
    assert all(np.array_equal(x, y) for x, y in zip(a.witness.tables, b.witness.tables))


def test_bruteforce_budget():
    g = repeat(build_agreement_game(2), 3)
    with pytest.raises(BudgetExceeded):
        classical_value_bruteforce(g)


# ---------------------------------------------------------------- LP

def _scipy_max(c, a, b):
    res = linprog(-c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
    return res.status, (-res.fun if res.status == 0 else None)


def test_simplex_matches_scipy_on_random_lps(rng):
    for _ in range(40):
        m, n = int(rng.integers(2, 6)), int(rng.integers(4, 10))
        a = rng.integers(-3, 4, size=(m, n)).astype(float)
        x0 = rng.random(n) * (rng.random(n) < 0.5)
        b = a @ x0
        c = rng.standard_normal(n)
        status, val = _scipy_max(c, a, b)
        res = simplex_max(c, a, b)
        if status == 0:
            assert res.status == "optimal"
            assert res.value == pytest.approx(val, abs=1e-7)
            assert np.allclose(a @ res.x, b, atol=1e-7) and (res.x >= 0).all()
        elif status == 3:
            assert res.status == "unbounded"


def test_simplex_bland_rule_agrees(rng):
    for _ in range(10):
        a = rng.integers(-2, 3, size=(3, 7)).astype(float)
        b = a @ rng.random(7)
        c = rng.standard_normal(7)
        s, v = _scipy_max(c, a, b)
        if s != 0:
            continue
        assert simplex_max(c, a, b, rule="bland").value == pytest.approx(v, abs=1e-7)


def test_simplex_infeasible_and_unbounded():
    a = np.array([[1.0, 1.0]])
    assert simplex_max(np.zeros(2), a, np.array([-1.0])).status == "infeasible"
    assert simplex_max(np.array([1.0, 0.0]), np.array([[1.0, -1.0]]), np.array([0.0])).status == "unbounded"


def test_simplex_drops_dependent_rows():
    a = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    res = simplex_max(np.array([1.0, 2.0, 0.0]), a, np.array([1.0, 2.0, 1.0]))
    assert res.status == "optimal" and res.dropped_rows == 1
    assert res.value == pytest.approx(2.0)
    # an inconsistent duplicate row makes the system infeasible
    assert simplex_max(np.ones(3), a, np.array([1.0, 3.0, 1.0])).status == "infeasible"


def test_independent_rows_rank(rng):
    base = rng.standard_normal((3, 6))
    a = np.vstack([base, base[0] + base[1], 2 * base[2]])
    assert len(independent_rows(a)) == 3


def test_ns_lp_agreement_three_players():
    r = ns_value_lp(build_agreement_game(3))
    assert r.value == pytest.approx(0.5, abs=1e-6)


def test_ns_lp_agreement_two_players_exceeds_half():
    # an explicit non-signaling behavior wins with probability 2/3
    g = build_agreement_game(2)
    r = ns_value_lp(g)
    assert r.value == pytest.approx(2 / 3, abs=1e-9)
    table = np.zeros(g.inputs + g.outputs)
    support = {
        (0, 0): [((0, 0), (0, 0)), ((1, 0), (1, 0)), ((1, 1), (0, 1))],
        (0, 1): [((0, 0), (0, 0)), ((1, 0), (0, 1)), ((1, 1), (1, 0))],
        (1, 0): [((0, 0), (0, 1)), ((1, 0), (1, 0)), ((1, 1), (0, 0))],
        (1, 1): [((0, 0), (0, 1)), ((1, 0), (0, 0)), ((1, 1), (1, 0))],
    }
    for x, pairs in support.items():
        for (i0, b0), (i1, b1) in pairs:
            table[x + (2 * i0 + b0, 2 * i1 + b1)] = 1 / 3
    from repval.games import NSBehavior
    from repval.values import evaluate_behavior
    assert evaluate_behavior(g, NSBehavior(table).check()) == pytest.approx(2 / 3)


def test_ns_lp_matches_scipy(rng):
    for _ in range(5):
        g = _random_game(rng, (2, 2), (2, 3))
        a, b = ns_constraints(g)
        _, val = _scipy_max(g.weight_table().reshape(-1), a, b)
        assert ns_value_lp(g).value == pytest.approx(val, abs=1e-7)


def test_ns_witness_is_valid(chsh):
    r = ns_value_lp(chsh)
    assert r.value == pytest.approx(1.0, abs=1e-7)
    r.witness.check()


# ---------------------------------------------------------------- quantum

def _chsh_optimal():
    z, x = np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])

    def proj(obs):
        return np.stack([(np.eye(2) + obs) / 2, (np.eye(2) - obs) / 2])
    alice = np.stack([proj(z), proj(x)])
    bob = np.stack([proj((z + x) / math.sqrt(2)), proj((z - x) / math.sqrt(2))])
    return QuantumStrategy((2, 2), np.array([1, 0, 0, 1]) / math.sqrt(2), (alice, bob))


def test_chsh_analytic_optimum(chsh):
    assert evaluate_quantum_strategy(chsh, _chsh_optimal()) == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-12)


def test_embedded_classical_strategy(chsh):
    s = ClassicalStrategy((np.array([0, 1]), np.array([0, 0])))
    q = QuantumStrategy.from_classical(chsh, s)
    assert evaluate_quantum_strategy(chsh, q) == pytest.approx(evaluate_classical(chsh, s))


def test_repeated_quantum_strategy_value(chsh):
    s = _chsh_optimal()
    assert evaluate_quantum_strategy(repeat(chsh, 2), s.repeat(2)) == pytest.approx(math.cos(math.pi / 8) ** 4)


def test_seesaw_reaches_chsh_optimum():
    r = chsh_seesaw()
    assert r.value >= 0.8535 - 1e-4
    assert r.diagnostics["monotone"]


def test_seesaw_one_dimensional_is_at_most_classical(rng):
    for _ in range(3):
        g = _random_game(rng, (2, 2), (2, 2))
        assert seesaw_lower_bound(g, (1, 1), restarts=3).value <= classical_value_bruteforce(g).value + 1e-9


def test_seesaw_perfect_classical_game():
    g = Game.from_function((2, 2), (2, 2), [[.5, .5], [.5, .5]], lambda x, a: a[0] == a[1])
    assert seesaw_lower_bound(g, (2, 2)).value == pytest.approx(1.0, abs=1e-7)


def test_seesaw_rejects_non_binary():
    with pytest.raises(InvariantViolation):
        seesaw_lower_bound(build_agreement_game(2), (2, 2))


@pytest.mark.parametrize("name", sorted(corpus_games()))
def test_value_ordering_on_corpus(name):
    g = corpus_games()[name]
    c = classical_value_bruteforce(g).value
    s = seesaw_lower_bound(g, [2] * g.k, restarts=5).value
    ns = ns_value_lp(g).value
    assert c <= s + 1e-6 and s <= ns + 1e-6
