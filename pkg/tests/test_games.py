import itertools
import json

import numpy as np
import pytest

from repval.errors import InvariantViolation
from repval.games import (
    ClassicalStrategy,
    CQGame,
    CQStrategy,
    Game,
    NSBehavior,
    QuantumStrategy,
    agreement_answer,
    agreement_repeated_strategy,
    build_agreement_game,
    cqgame_from_json,
    cqgame_to_json,
    game_from_json,
    game_to_json,
    join_digits,
    lift_classical_game,
    lift_quantum_strategy,
    repeat,
    repeat_cq,
    split_digits,
    strategy_from_json,
    strategy_to_json,
    uniformize,
    uniformize_marginal,
)
from repval.qmat import random_density, random_unitary
from repval.values import evaluate_classical, evaluate_cq_strategy, evaluate_quantum_strategy

from conftest import make_chsh


def test_digits_round_trip():
    vals = np.arange(27)
    d = split_digits(vals, 3, 3)
    assert d[5].tolist() == [0, 1, 2]  # coordinate 0 most significant
    assert np.array_equal(join_digits(d, 3), vals)


def test_repeat_identity(chsh):
    assert repeat(chsh, 1) is chsh


def test_repeat_alphabets(chsh):
    g2 = repeat(chsh, 2)
    assert g2.inputs == (4, 4) and g2.outputs == (4, 4)
    assert np.isclose(g2.mu_joint().sum(), 1)


def test_repeated_predicate_is_conjunction(chsh):
    g2 = repeat(chsh, 2)
    # coordinate 0: x=(0,0), a=(0,0) wins; coordinate 1: x=(1,1), a=(0,0) loses
    x = (join_digits(np.array([0, 1]), 2), join_digits(np.array([0, 1]), 2))
    assert not g2.accepts(x, (0, 0))
    assert g2.accepts(x, (join_digits(np.array([0, 1]), 2), 0))


def test_repeated_table_matches_direct_enumeration(chsh):
    g2 = repeat(chsh, 2)
    table = g2.predicate_table().reshape(4, 4, 4, 4)
    for x0, x1, a0, a1 in itertools.product(range(4), repeat=4):
        dx0, dx1 = split_digits(x0, 2, 2), split_digits(x1, 2, 2)
        da0, da1 = split_digits(a0, 2, 2), split_digits(a1, 2, 2)
        want = all(chsh.accepts((dx0[c], dx1[c]), (da0[c], da1[c])) for c in range(2))
        assert bool(table[x0, x1, a0, a1]) == want


def test_repeated_product_strategy_value_is_product(rng):
    for _ in range(5):
        table = rng.random((2, 3, 2, 2)) < 0.5
        g = Game.from_table((2, 3), (2, 2), [rng.dirichlet([1, 1]), rng.dirichlet([1, 1, 1])], table)
        s = ClassicalStrategy((rng.integers(0, 2, 2), rng.integers(0, 2, 3)))
        v = evaluate_classical(g, s)
        assert evaluate_classical(repeat(g, 2), s.repeat(g, 2)) == pytest.approx(v ** 2, abs=1e-12)


def test_repeat_cq_identity_and_ids():
    v = np.broadcast_to(np.eye(4), (2, 2, 4, 4))
    g = CQGame.create((2, 2), (2, 2), [[0.5, 0.5], [0.5, 0.5]], v)
    assert repeat_cq(g, 1) is g
    g2 = repeat_cq(g, 2)
    assert np.allclose(g2.V((3, 1)), np.eye(16))


def test_repeat_cq_spectrum_at_most_one(rng):
    v = np.zeros((2, 2, 4, 4), dtype=complex)
    for x in np.ndindex(2, 2):
        r = random_density(4, rng)
        v[x] = r / np.linalg.eigvalsh(r)[-1]
    g = CQGame.create((2, 2), (2, 2), [[0.5, 0.5], [0.5, 0.5]], v)
    g2 = repeat_cq(g, 2)
    for x in np.ndindex(4, 4):
        w = np.linalg.eigvalsh(g2.V(x))
        assert w[-1] <= 1 + 1e-10 and w[0] >= -1e-10


def test_uniformize_exact_thirds():
    m, counts = uniformize_marginal(np.array([1 / 3, 2 / 3]), 0.0)
    assert m == 3 and counts.tolist() == [1, 2]


def test_uniformize_uniform_is_identity():
    m, counts = uniformize_marginal(np.ones(4) / 4, 0.01)
    assert m == 4 and counts.tolist() == [1, 1, 1, 1]


def test_uniformize_least_denominator():
    # thirds already meet TV 0.05; exact rounding needs tenths
    m, counts = uniformize_marginal(np.array([0.3, 0.7]), 0.05)
    assert m == 3 and counts.tolist() == [1, 2]
    m, counts = uniformize_marginal(np.array([0.3, 0.7]), 0.0)
    assert m == 10 and counts.tolist() == [3, 7]


def test_uniformize_moves_values_by_at_most_gamma(rng):
    g = make_chsh([np.array([0.3, 0.7]), np.array([0.45, 0.55])])
    gamma = 0.1
    gu, maps = uniformize(g, gamma)
    assert gu.is_free
    for tables in itertools.product(itertools.product(range(2), repeat=2), repeat=2):
        s = ClassicalStrategy(tuple(np.array(t) for t in tables))
        pulled = ClassicalStrategy(tuple(np.asarray(t)[f] for t, f in zip(s.tables, maps)))
        assert abs(evaluate_classical(gu, pulled) - evaluate_classical(g, s)) <= gamma + 1e-12


def test_uniformize_rejects_non_free():
    mu = np.array([[0.5, 0], [0, 0.5]])
    g = Game.from_function((2, 2), (2, 2), mu, lambda x, a: True)
    with pytest.raises(InvariantViolation):
        uniformize(g, 0.1)


def test_agreement_predicate_examples():
    g = build_agreement_game(2)
    assert g.accepts((0, 0), (agreement_answer(1, 0), agreement_answer(1, 0)))
    assert not g.accepts((0, 0), (agreement_answer(0, 0), agreement_answer(1, 0)))


def test_agreement_repeated_strategy_k2_wins_half_of_inputs():
    g = build_agreement_game(2)
    g2 = repeat(g, 2)
    s = agreement_repeated_strategy(2).check(g2)
    wins = sum(g2.accepts(x, (s.tables[0][x[0]], s.tables[1][x[1]])) for x in np.ndindex(*g2.inputs))
    assert wins == 8
    assert evaluate_classical(g2, s) == 0.5


def test_agreement_repeated_strategy_k3():
    g3 = repeat(build_agreement_game(3), 3)
    assert np.prod(g3.inputs) == 512
    assert evaluate_classical(g3, agreement_repeated_strategy(3)) == 0.5


@pytest.mark.parametrize("k", [2, 3])
def test_agreement_first_coordinate_wins_half(k):
    g = build_agreement_game(k)
    gk = repeat(g, k)
    s = agreement_repeated_strategy(k)
    total = 0.0
    mu = gk.mu_joint()
    for x in np.ndindex(*gk.inputs):
        a = [s.tables[j][x[j]] for j in range(k)]
        xs = [split_digits(x[j], 2, k)[0] for j in range(k)]
        as_ = [split_digits(a[j], 2 * k, k)[0] for j in range(k)]
        total += mu[x] * g.accepts(xs, as_)
    assert total == pytest.approx(0.5)


def test_classical_strategy_checks_alphabet(chsh):
    with pytest.raises(InvariantViolation):
        ClassicalStrategy((np.array([0, 2]), np.array([0, 0]))).check(chsh)


def test_quantum_strategy_rejects_bad_povm():
    p = np.zeros((1, 2, 1, 1))
    p[0, 0] = 0.5
    with pytest.raises(InvariantViolation):
        QuantumStrategy((1,), np.ones(1), (p,))


def test_ns_behavior_subset_marginals():
    # uniform random answers, three players, is non-signaling for every subset
    table = np.full((2, 2, 2, 2, 2, 2), 1 / 8)
    b = NSBehavior(table).check()
    assert b.subset_marginal_spread([0, 1]) == pytest.approx(0.0)


def test_ns_behavior_rejects_signaling():
    table = np.zeros((2, 2, 2, 2))
    for x0, x1 in np.ndindex(2, 2):
        table[x0, x1, x1, 0] = 1  # player 0 outputs player 1's input
    with pytest.raises(InvariantViolation):
        NSBehavior(table).check()


def test_json_round_trips(chsh, rng):
    g = game_from_json(json.loads(json.dumps(game_to_json(chsh))))
    assert np.array_equal(g.predicate_table(), chsh.predicate_table())
    assert np.allclose(g.mu_joint(), chsh.mu_joint())
    s = ClassicalStrategy((np.array([0, 1]), np.array([1, 1])))
    assert np.array_equal(strategy_from_json(strategy_to_json(s)).tables[1], s.tables[1])
    v = np.zeros((2, 2, 4, 4), dtype=complex)
    for x in np.ndindex(2, 2):
        r = random_density(4, rng)
        v[x] = r / np.linalg.eigvalsh(r)[-1]
    cq = CQGame.create((2, 2), (2, 2), [[0.5, 0.5], [0.2, 0.8]], v)
    back = cqgame_from_json(json.loads(json.dumps(cqgame_to_json(cq))))
    assert np.allclose(back.V((1, 0)), cq.V((1, 0)))


def test_game_json_rejects_bad_schema():
    with pytest.raises(InvariantViolation):
        game_from_json({"k": 2, "inputs": [2, 2]})


def test_lifted_strategy_matches_quantum_evaluation(chsh):
    from conftest import chsh_seesaw
    s = chsh_seesaw().witness
    cq = lift_classical_game(chsh)
    assert evaluate_cq_strategy(cq, lift_quantum_strategy(chsh, s)) == pytest.approx(
        evaluate_quantum_strategy(chsh, s), abs=1e-10)


def test_cq_strategy_identity_and_zero_verifiers(rng):
    ids = np.broadcast_to(np.eye(4), (2, 2, 4, 4))
    s = CQStrategy((1, 1), (2, 2), np.array([1, 0, 0, 0]),
                   tuple(np.stack([random_unitary(2, rng) for _ in range(2)]) for _ in range(2)))
    assert evaluate_cq_strategy(CQGame.create((2, 2), (2, 2), [[.5, .5], [.5, .5]], ids), s) == pytest.approx(1)
    zero = np.zeros((2, 2, 4, 4))
    assert evaluate_cq_strategy(CQGame.create((2, 2), (2, 2), [[.5, .5], [.5, .5]], zero), s) == pytest.approx(0)
