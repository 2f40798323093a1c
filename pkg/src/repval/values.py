"""Game values: classical brute force, non-signaling LP, strategy evaluation, see-saw."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import _backend
from .budget import BRUTEFORCE_BUDGET, LP_BUDGET, MATERIALIZE_LIMIT, check_alloc, check_count
from .errors import InvariantViolation
from .games import (
    ClassicalStrategy,
    CQGame,
    CQStrategy,
    Game,
    NSBehavior,
    QuantumStrategy,
    strategy_to_json,
)
from .lp import simplex_max
from .qmat import hermitian_eig, random_pure

VALUE_TOL = 1e-7


@dataclass
class ValueResult:
    value: float
    method: str
    witness: Any = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"method": self.method, "value": float(self.value), "diagnostics": _jsonable(self.diagnostics)}
        if self.witness is not None:
            out["witness"] = strategy_to_json(self.witness)
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


# --------------------------------------------------------------------------
# classical


def strategy_space_size(g: Game) -> int:
    """Number of deterministic strategies of players 2..k."""
    return math.prod(a ** x for x, a in zip(g.inputs[1:], g.outputs[1:]))


def bruteforce_weights(g: Game) -> tuple[np.ndarray, int]:
    """Weights shaped (X_1, A_1, X_rest, A_rest) and the number of strategies
    of players 2..k, as consumed by the brute-force kernels."""
    total = strategy_space_size(g)
    check_count(total, BRUTEFORCE_BUDGET, "deterministic strategies")
    check_count(g.n_inputs * g.n_outputs, MATERIALIZE_LIMIT, "weight table entries")
    k = g.k
    order = [0, k] + list(range(1, k)) + list(range(k + 1, 2 * k))
    shape = (g.inputs[0], g.outputs[0], math.prod(g.inputs[1:]), math.prod(g.outputs[1:]))
    return np.ascontiguousarray(g.weight_table().transpose(order).reshape(shape)), total


def classical_value_bruteforce(g: Game, threads: int = 1) -> ValueResult:
    """Exact classical value: enumerate players 2..k, player 1 best-responds."""
    k = g.k
    w2, total = bruteforce_weights(g)
    xr = math.prod(g.inputs[1:])
    start = time.perf_counter()
    best, idx = _backend.bruteforce(w2, g.inputs[1:], g.outputs[1:], total, threads)
    tables = _decode_rest(idx, g.inputs[1:], g.outputs[1:])
    # player 1 best response against the decoded tables
    xgrid = np.stack(np.unravel_index(np.arange(xr), g.inputs[1:]), axis=1) if k > 1 else np.zeros((1, 0), int)
    arest = np.zeros(xr, dtype=np.int64)
    for j, (t, ad) in enumerate(zip(tables, g.outputs[1:])):
        arest = arest * ad + t[xgrid[:, j]]
    scores = w2[:, :, np.arange(xr), arest].sum(axis=2)
    first = np.argmax(scores, axis=1)
    witness = ClassicalStrategy((first,) + tuple(tables))
    value = evaluate_classical(g, witness)
    if abs(value - best) > VALUE_TOL:
        raise AssertionError(f"witness value {value} differs from the search maximum {best}")
    return ValueResult(value, "classical", witness,
                       {"candidates": total, "backend": _backend.NAME,
                        "seconds": time.perf_counter() - start})


def _decode_rest(idx: int, xdims, adims) -> list[np.ndarray]:
    tables = []
    for xd, ad in zip(reversed(xdims), reversed(adims)):
        t = np.empty(xd, dtype=np.int64)
        for x in range(xd - 1, -1, -1):
            t[x] = idx % ad
            idx //= ad
        tables.append(t)
    return tables[::-1]


def classical_behavior_answers(g: Game, s: ClassicalStrategy):
    xs = np.stack(np.unravel_index(np.arange(g.n_inputs), g.inputs), axis=1)
    ans = np.stack([s.tables[j][xs[:, j]] for j in range(g.k)], axis=1)
    return xs, ans


def evaluate_classical(g: Game, s: ClassicalStrategy) -> float:
    """Exact win probability of a deterministic strategy."""
    s.check(g)
    check_count(g.n_inputs, MATERIALIZE_LIMIT, "input tuples")
    xs, ans = classical_behavior_answers(g, s)
    win = g.accepts_batch(xs, ans)
    mu = g.mu_joint().reshape(-1)
    return float(mu[win].sum())


# --------------------------------------------------------------------------
# non-signaling


def ns_constraints(g: Game):
    """Equality rows over variables p[x..., a...] (flattened C order)."""
    k = g.k
    shape = g.inputs + g.outputs
    nvar = math.prod(shape)
    idx = np.arange(nvar).reshape(shape)
    rows = []
    # normalization per x
    for x in np.ndindex(*g.inputs):
        r = np.zeros(nvar)
        r[idx[x].reshape(-1)] = 1.0
        rows.append((r, 1.0))
    # player j's marginal-free sum cannot depend on x_j (compare against x_j = 0)
    for j in range(k):
        moved = np.moveaxis(idx, [j, k + j], [0, 1])  # (x_j, a_j, rest x..., rest a...)
        for xj in range(1, g.inputs[j]):
            for rest in np.ndindex(*moved.shape[2:]):
                r = np.zeros(nvar)
                r[moved[(xj, slice(None)) + rest]] += 1.0
                r[moved[(0, slice(None)) + rest]] -= 1.0
                rows.append((r, 0.0))
    a = np.array([r for r, _ in rows])
    b = np.array([v for _, v in rows])
    return a, b


def ns_value_lp(g: Game) -> ValueResult:
    nvar = g.n_inputs * g.n_outputs
    nrows = g.n_inputs + sum((x - 1) * (g.n_inputs // x) * (g.n_outputs // a)
                             for x, a in zip(g.inputs, g.outputs))
    check_count(nvar * nrows, LP_BUDGET, "LP tableau entries")
    check_alloc(nvar * nrows, 8, "LP tableau")
    start = time.perf_counter()
    a, b = ns_constraints(g)
    c = g.weight_table().reshape(-1)
    res = simplex_max(c, a, b)
    if res.status == "infeasible":
        raise AssertionError("non-signaling LP reported infeasible; the uniform behavior is always feasible")
    if res.status != "optimal":
        raise AssertionError(f"non-signaling LP ended with status {res.status}")
    behavior = NSBehavior(res.x.reshape(g.inputs + g.outputs)).check()
    return ValueResult(float(res.value), "ns", behavior,
                       {"iterations": res.iterations, "rows": int(a.shape[0]), "variables": int(nvar),
                        "dropped_rows": res.dropped_rows, "status": res.status,
                        "seconds": time.perf_counter() - start})


def evaluate_behavior(g: Game, p: NSBehavior) -> float:
    return float((g.weight_table() * p.table).sum())


# --------------------------------------------------------------------------
# quantum


def _rho_tensor(state: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    psi = state.reshape(dims)
    return np.multiply.outer(psi, psi.conj())


def quantum_behavior(s: QuantumStrategy, keep: int | None = None) -> np.ndarray:
    """P[x..., a...] = <xi| (x)_j M^j[x_j, a_j] |xi>.

    With ``keep = j`` player j's POVM is not applied; the result is
    R[x_-j..., a_-j..., e_j, f_j], the operator with tr(M R) giving the
    probabilities once player j measures M.
    """
    k = s.k
    rho = _rho_tensor(s.state, s.e_dims)
    # rho axes: e_0..e_{k-1}, f_0..f_{k-1}; then x_j, a_j pairs appended
    operands = [rho, list(range(2 * k))]
    out_x, out_a = [], []
    for j, p in enumerate(s.povms):
        if j == keep:
            continue
        xj, aj = 2 * k + 2 * j, 2 * k + 2 * j + 1
        operands += [p, [xj, aj, k + j, j]]
        out_x.append(xj)
        out_a.append(aj)
    out = out_x + out_a + ([keep, k + keep] if keep is not None else [])
    check_alloc(math.prod(p.shape[0] * p.shape[1] for p in s.povms), 16, "behavior table")
    return np.einsum(*operands, out, optimize=True)


def evaluate_quantum_strategy(g: Game, s: QuantumStrategy) -> float:
    s.check_game(g)
    p = quantum_behavior(s).real
    return float((g.weight_table() * p).sum())


def evaluate_cq_strategy(g: CQGame, s: CQStrategy) -> float:
    """E_x || sqrt(V_x) U_x |xi> ||^2 = E_x tr(V_x rho_A(x))."""
    if s.a_dims != g.answer_dims or s.k != g.k:
        raise InvariantViolation("strategy answer registers do not match the game")
    k = s.k
    dims = [d for j in range(k) for d in (s.e_dims[j], s.a_dims[j])]
    mu = g.mu_joint()
    total = 0.0
    for x in np.ndindex(*g.inputs):
        if mu[x] == 0:
            continue
        t = s.state.reshape(dims)
        for j in range(k):
            u = s.unitaries[j][x[j]].reshape(s.e_dims[j], s.a_dims[j], s.e_dims[j], s.a_dims[j])
            t = np.tensordot(u, t, axes=([2, 3], [2 * j, 2 * j + 1]))
            t = np.moveaxis(t, [0, 1], [2 * j, 2 * j + 1])
        # trace out E registers: group as (E..., A...)
        order = [2 * j for j in range(k)] + [2 * j + 1 for j in range(k)]
        m = t.transpose(order).reshape(math.prod(s.e_dims), math.prod(s.a_dims))
        rho_a = m.T @ m.conj()
        total += mu[x] * float(np.real(np.trace(g.V(x) @ rho_a)))
    return total


# --------------------------------------------------------------------------
# see-saw


def _binary_povms(projectors):
    """projectors[j]: (X_j, d, d) projector for answer 1 -> POVM array (X_j, 2, d, d)."""
    out = []
    for p in projectors:
        eye = np.eye(p.shape[-1])
        out.append(np.stack([eye[None] - p, p], axis=1))
    return tuple(out)


def _positive_projector(w: np.ndarray) -> np.ndarray:
    vals, vecs = hermitian_eig((w + w.conj().T) / 2)
    keep = vecs[:, vals > 1e-14]
    return keep @ keep.conj().T


def _game_operator(weights: np.ndarray, povms, e_dims) -> np.ndarray:
    k = len(povms)
    operands = [weights, list(range(2 * k))]
    for j, p in enumerate(povms):
        operands += [p, [j, k + j, 2 * k + j, 3 * k + j]]
    out = list(range(2 * k, 3 * k)) + list(range(3 * k, 4 * k))
    d = math.prod(e_dims)
    return np.einsum(*operands, out, optimize=True).reshape(d, d)


def _objective(weights, state, povms, e_dims) -> float:
    qs = QuantumStrategy(e_dims, state, povms)
    return float((weights * quantum_behavior(qs).real).sum())


def _seesaw_run(weights, e_dims, projectors, state, max_sweeps, tol):
    k = len(e_dims)
    history = []
    povms = _binary_povms(projectors)
    history.append(_objective(weights, state, povms, e_dims))
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        before = history[-1]
        for j in range(k):
            qs = QuantumStrategy(e_dims, state, povms)
            r = quantum_behavior(qs, keep=j)  # (x_-j, a_-j, e_j, f_j)
            # weight difference between answering 1 and 0 for player j
            wj = np.moveaxis(weights, [j, k + j], [0, 1])
            diff = wj[:, 1] - wj[:, 0]  # (x_j, x_-j..., a_-j...)
            nrest = diff.ndim - 1
            # the objective is tr(P W) + const with W = sum diff * R
            w_ops = np.tensordot(diff, r, axes=(list(range(1, 1 + nrest)), list(range(nrest))))
            projectors[j] = np.stack([_positive_projector(w_ops[x]) for x in range(w_ops.shape[0])])
            povms = _binary_povms(projectors)
            history.append(_objective(weights, state, povms, e_dims))
        op = _game_operator(weights, povms, e_dims)
        vals, vecs = hermitian_eig((op + op.conj().T) / 2)
        state = vecs[:, 0]
        history.append(_objective(weights, state, povms, e_dims))
        if history[-1] - before <= tol:
            break
    return history[-1], state, povms, history, sweeps


def _classical_seed(g: Game, e_dims, threads=1):
    """Embed the brute-force optimum: state |0...0>, answer fixed per input."""
    if strategy_space_size(g) > 1 << 20:
        return None
    res = classical_value_bruteforce(g, threads)
    projectors = []
    for t, d in zip(res.witness.tables, e_dims):
        projectors.append(np.stack([np.eye(d) * float(a == 1) for a in t]).astype(complex))
    state = np.zeros(math.prod(e_dims), dtype=complex)
    state[0] = 1.0
    return projectors, state


def seesaw_lower_bound(g: Game, dims: Sequence[int], restarts: int = 5, seed: int = 0,
                       max_sweeps: int = 500, tol: float = 1e-12, threads: int = 1) -> ValueResult:
    """Lower bound on the entangled value by alternating best responses.

    Binary outputs only: the best response of a player is then the projector
    onto the positive eigenspace of its response operator.
    """
    if any(a != 2 for a in g.outputs):
        raise InvariantViolation("see-saw supports binary-output games only")
    e_dims = tuple(int(d) for d in dims)
    if len(e_dims) != g.k:
        raise InvariantViolation("one entanglement dimension per player is required")
    check_alloc(math.prod(e_dims) ** 2 * g.n_inputs * g.n_outputs, 16, "see-saw operators")
    weights = g.weight_table()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EE5A]))
    start = time.perf_counter()
    runs = []
    seeded = _classical_seed(g, e_dims, threads)
    inits = []
    if seeded is not None:
        inits.append(seeded)
    while len(inits) < max(1, restarts) + (seeded is not None):
        projectors = []
        for xd, d in zip(g.inputs, e_dims):
            ps = []
            for _ in range(xd):
                h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                ps.append(_positive_projector(h + h.conj().T))
            projectors.append(np.stack(ps))
        inits.append((projectors, random_pure(math.prod(e_dims), rng)))
    best = None
    monotone = True
    for projectors, state in inits:
        val, st, povms, hist, sweeps = _seesaw_run(weights, e_dims, [p.copy() for p in projectors],
                                                   state, max_sweeps, tol)
        monotone &= bool(np.all(np.diff(hist) >= -1e-10))
        runs.append({"value": val, "sweeps": sweeps})
        if best is None or val > best[0] + 1e-12:
            best = (val, st, povms)
    witness = QuantumStrategy(e_dims, best[1], best[2])
    value = evaluate_quantum_strategy(g, witness)
    return ValueResult(min(value, 1.0), "seesaw", witness,
                       {"restarts": runs, "seed": seed, "monotone": monotone,
                        "classical_seed": seeded is not None, "seconds": time.perf_counter() - start})
