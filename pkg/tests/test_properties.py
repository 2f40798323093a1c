"""Randomized invariants. Each property draws a seed (and a few sizes) from
hypothesis and builds the instance with numpy, so failures shrink to a seed."""
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from repval import advice
from repval.errors import UndefinedState
from repval.games import (
    ClassicalStrategy,
    Game,
    QuantumStrategy,
    join_digits,
    repeat,
    split_digits,
    uniformize,
)
from repval.lp import simplex_max
from repval.qit.battery import CHECKS
from repval.qit.measures import classical_relative_min_entropy, fidelity
from repval.qmat import (
    LabeledState,
    basis_distribution,
    hermitian_eig,
    partial_trace,
    polar_unitary_via_svd,
    project_component,
    random_density,
    random_unitary,
)
from repval.search import (
    SearchConfig,
    enumerate_group_acceptance,
    exact_acceptance,
    protocol_run,
    single_group_acceptance,
)
from repval.values import classical_value_bruteforce, evaluate_classical, ns_value_lp, seesaw_lower_bound

SEEDS = st.integers(0, 2 ** 32 - 1)
MANY = settings(max_examples=1000, deadline=None, derandomize=True,
                suppress_health_check=[HealthCheck.too_slow])
SOME = settings(max_examples=150, deadline=None, derandomize=True,
                suppress_health_check=[HealthCheck.too_slow])
FEW = settings(max_examples=30, deadline=None, derandomize=True,
               suppress_health_check=[HealthCheck.too_slow])


def _rng(seed):
    return np.random.default_rng(seed)


def _random_game(rng, inputs, outputs, density=0.5):
    mu = [rng.dirichlet(np.ones(x)) for x in inputs]
    table = rng.random(tuple(inputs) + tuple(outputs)) < density
    return Game.from_table(tuple(inputs), tuple(outputs), mu, table)


def _random_classical(rng, g):
    return ClassicalStrategy(tuple(rng.integers(0, a, size=x) for x, a in zip(g.inputs, g.outputs)))


# ---------------------------------------------------------------- qmat

@MANY
@given(SEEDS, st.lists(st.integers(1, 3), min_size=2, max_size=4))
def test_partial_trace_preserves_trace_and_positivity(seed, dims):
    rng = _rng(seed)
    regs = [(f"R{i}", d) for i, d in enumerate(dims)]
    total = math.prod(dims)
    if rng.random() < 0.5:
        s = LabeledState.mixed(regs, random_density(total, rng))
    else:
        v = rng.standard_normal(total) + 1j * rng.standard_normal(total)
        s = LabeledState.pure(regs, v / np.linalg.norm(v))
    keep = [r for r, _ in regs if rng.random() < 0.5] or [regs[0][0]]
    t = partial_trace(s, keep)
    assert abs(np.trace(t.data).real - 1.0) <= 1e-9
    assert np.linalg.eigvalsh(t.data).min() >= -1e-9


@MANY
@given(SEEDS, st.integers(1, 6))
def test_eig_reconstruction(seed, d):
    rng = _rng(seed)
    h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = h + h.conj().T
    w, v = hermitian_eig(h)
    assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - h) <= 1e-8 * max(1.0, np.linalg.norm(h))


@SOME
@given(SEEDS, st.integers(1, 4))
def test_polar_unitary_maximizes_trace(seed, d):
    rng = _rng(seed)
    k = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    u = polar_unitary_via_svd(k)
    best = np.trace(u @ k)
    assert abs(best.imag) <= 1e-9
    for _ in range(100):
        assert best.real >= abs(np.trace(random_unitary(d, rng) @ k)) - 1e-9


@MANY
@given(SEEDS, st.integers(2, 3), st.integers(1, 3))
def test_projection_probabilities_sum_to_trace(seed, dx, da):
    rng = _rng(seed)
    regs = [("X", dx), ("A", da)]
    scale = rng.uniform(0.2, 1.0)
    s = LabeledState.mixed(regs, scale * random_density(dx * da, rng))
    total = 0.0
    for x in range(dx):
        total += project_component(s, ["X"], [x])[0]
    assert total == pytest.approx(scale, abs=1e-9)


@MANY
@given(SEEDS, st.integers(1, 4))
def test_fidelity_bounds_and_symmetry(seed, d):
    rng = _rng(seed)
    a, b = random_density(d, rng), random_density(d, rng)
    f = fidelity(a, b)
    assert -1e-9 <= f <= 1 + 1e-9
    assert f == pytest.approx(fidelity(b, a), abs=1e-7)


# ---------------------------------------------------------------- information-theory facts

@pytest.mark.parametrize("name", sorted(n for n in CHECKS if n != "binary_bures_bound"))
@SOME
@given(seed=SEEDS)
def test_inequality_holds_on_random_instance(name, seed):
    relation, fn = CHECKS[name]
    lhs, rhs = fn(_rng(seed))
    scale = max(1.0, abs(rhs)) if math.isfinite(rhs) else 1.0
    if relation == "le":
        assert lhs <= rhs + 1e-7 * scale
    else:
        assert lhs == rhs or abs(lhs - rhs) <= 1e-7 * scale


# ---------------------------------------------------------------- games

@MANY
@given(st.integers(2, 5), st.integers(1, 4), SEEDS)
def test_digits_round_trip(base, n, seed):
    v = _rng(seed).integers(0, base ** n, size=7)
    assert np.array_equal(join_digits(split_digits(v, base, n), base), v)


@SOME
@given(SEEDS, st.integers(1, 2))
def test_product_strategy_value_multiplies(seed, n):
    rng = _rng(seed)
    g = _random_game(rng, (2, 2), (2, 2))
    s = _random_classical(rng, g)
    v = evaluate_classical(g, s)
    assert evaluate_classical(repeat(g, n), s.repeat(g, n)) == pytest.approx(v ** n, abs=1e-12)


@SOME
@given(SEEDS, st.sampled_from([0.05, 0.1, 0.3]))
def test_uniformize_moves_strategy_values_by_at_most_gamma(seed, gamma):
    rng = _rng(seed)
    g = _random_game(rng, (2, 3), (2, 2))
    gu, maps = uniformize(g, gamma)
    s = _random_classical(rng, g)
    pulled = ClassicalStrategy(tuple(t[f] for t, f in zip(s.tables, maps)))
    assert abs(evaluate_classical(gu, pulled) - evaluate_classical(g, s)) <= gamma + 1e-9
    assert gu.is_free


# ---------------------------------------------------------------- values

@SOME
@given(SEEDS, st.integers(2, 6), st.integers(3, 9))
def test_simplex_matches_scipy(seed, m, extra):
    rng = _rng(seed)
    n = m + extra
    a = rng.standard_normal((m, n))
    x0 = rng.random(n)
    b = a @ x0
    c = rng.standard_normal(n)
    ours = simplex_max(c, a, b, max_iter=20_000)
    ref = linprog(-c, A_eq=a, b_eq=b, bounds=[(0, None)] * n, method="highs")
    if ref.status == 3:
        assert ours.status == "unbounded"
    else:
        assert ours.status == "optimal"
        assert ours.value == pytest.approx(-ref.fun, abs=1e-6 * max(1.0, abs(ref.fun)))
        assert np.all(ours.x >= -1e-9) and np.allclose(a @ ours.x, b, atol=1e-6)


@FEW
@given(SEEDS)
def test_value_ordering_on_random_games(seed):
    rng = _rng(seed)
    g = _random_game(rng, (2, 2), (2, 2), density=rng.uniform(0.3, 0.8))
    c = classical_value_bruteforce(g).value
    q = seesaw_lower_bound(g, (2, 2), restarts=2, seed=seed)
    ns = ns_value_lp(g)
    assert c <= q.value + 1e-6 and q.value <= ns.value + 1e-6
    assert q.diagnostics["monotone"]
    ns.witness.check()


@SOME
@given(SEEDS)
def test_bruteforce_invariant_under_relabeling(seed):
    rng = _rng(seed)
    g = _random_game(rng, (2, 3), (2, 3))
    perms = [rng.permutation(d) for d in g.inputs + g.outputs]
    table = g.predicate_table()[np.ix_(*perms)]
    mu = [m[p] for m, p in zip(g.marginals(), perms[:2])]
    h = Game.from_table(g.inputs, g.outputs, mu, table)
    assert classical_value_bruteforce(h).value == pytest.approx(classical_value_bruteforce(g).value, abs=1e-12)


# ---------------------------------------------------------------- advice states

@FEW
@given(SEEDS)
def test_conditioning_respects_log_inverse_lambda(seed):
    rng = _rng(seed)
    g = _random_game(rng, (2, 2), (2, 2), density=rng.uniform(0.4, 0.9))
    gn = repeat(g, 2)
    s = QuantumStrategy.from_classical(gn, _random_classical(rng, g).repeat(g, 2))
    psi = advice.build_psi0(g, 2, s)
    try:
        phi = advice.condition_win_all(psi)
    except UndefinedState:
        return  # this strategy never wins every coordinate
    r = advice.measure_properties(phi)
    bound = math.log2(1 / phi.lam)
    assert sum(r.divergences) <= bound + 1e-7
    labels = [advice.x_label(i, j) for i in range(2) for j in range(2)]
    after = basis_distribution(phi.state, labels).reshape(-1)
    before = basis_distribution(psi.state, labels).reshape(-1)
    assert classical_relative_min_entropy(after, before) <= bound + 1e-7


# ---------------------------------------------------------------- search

def _loss(rng, n, count):
    loss = np.zeros(n, dtype=np.uint8)
    loss[rng.choice(n, size=count, replace=False)] = 1
    return loss


@SOME
@given(SEEDS, st.integers(1, 8), st.integers(4, 10))
def test_adding_losing_coordinates_never_helps(seed, m, n):
    rng = _rng(seed)
    if n ** m > 200_000:
        m = max(1, int(math.log(200_000) / math.log(n)))
    loss = _loss(rng, n, int(rng.integers(0, n)))
    more = loss.copy()
    more[rng.integers(0, n)] = 1
    assert enumerate_group_acceptance(more, m) <= enumerate_group_acceptance(loss, m) + 1e-12


@SOME
@given(SEEDS, st.integers(1, 3))
def test_exact_acceptance_is_single_group_power(seed, q):
    rng = _rng(seed)
    n = int(rng.integers(20, 200))
    cfg = SearchConfig.create(n, 0.2, 0.5, q=q)
    loss = _loss(rng, n, int(rng.integers(1, n)))
    assert exact_acceptance(loss, cfg) == pytest.approx(single_group_acceptance(loss.mean(), cfg.m) ** q, rel=1e-12)


@SOME
@given(st.floats(0.05, 1.0), st.integers(1, 64))
def test_group_misses_losing_coordinates_rarely(eps, m):
    # probability that m uniform samples all win when a fraction eps loses
    assert (1 - eps) ** m <= math.exp(-eps * m) + 1e-15


@FEW
@given(SEEDS)
def test_search_never_reports_winning_index(seed):
    rng = _rng(seed)
    cfg = SearchConfig.create(400, 0.1, 0.5, q=4)
    loss = _loss(rng, 400, int(rng.integers(0, 80)))
    out = protocol_run(loss, cfg, samples=300, seed=seed)
    for idx in out.found_counts:
        assert loss[int(idx)] == 1
    assert 0.0 <= out.accept_prob <= 1.0
