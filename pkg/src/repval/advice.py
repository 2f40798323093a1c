"""Advice states of the repetition reductions, built and measured at desk scale.

Register naming (``i`` is a coordinate, ``j`` a player, both 0-based):
``X{i}.{j}`` inputs, ``Xp{i}.{j}`` their copies, ``E{j}`` the shared
entanglement, ``A{i}.{j}`` answers and ``R{i}`` verification flags. Player
j holds ``X{.}.{j}``, ``Xp{.}.{j}``, ``E{j}`` and ``A{.}.{j}``.

Conditioning on winning uses exact projection; the search protocol that
would prepare the conditioned state is simulated separately in
:mod:`repval.search`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .budget import MATERIALIZE_LIMIT, check_count
from .errors import InvariantViolation, UndefinedState
from .games import (
    ClassicalStrategy,
    CQGame,
    CQStrategy,
    Game,
    QuantumStrategy,
    lift_classical_game,
    repeat,
    split_digits,
)
from .qit.measures import (
    classical_bures_sq,
    classical_relative_entropy,
    mutual_information,
)
from .qit.rounding import apply_rounding, conditioned, strategy_rounding
from .qmat import LabeledState, basis_distribution, matrix_function_psd

ADVICE_DIM_LIMIT = 1 << 17
CHAIN_TOL = 1e-6


def x_label(i: int, j: int) -> str:
    return f"X{i}.{j}"


def xp_label(i: int, j: int) -> str:
    return f"Xp{i}.{j}"


def e_label(j: int) -> str:
    return f"E{j}"


def a_label(i: int, j: int) -> str:
    return f"A{i}.{j}"


def r_label(i: int) -> str:
    return f"R{i}"


@dataclass(frozen=True, eq=False)
class AdviceState:
    state: LabeledState  # normalized pure state
    base: CQGame  # single-game verification; classical games are lifted
    n: int
    event: str
    lam: float
    flags: tuple[int, ...] = ()  # coordinates carrying an R register
    inputs_fixed: tuple[int, ...] = ()  # coordinates conditioned in Protocol B style

    @property
    def k(self) -> int:
        return self.base.k

    def player_registers(self, j: int) -> list[str]:
        n = self.n
        return ([x_label(i, j) for i in range(n)] + [xp_label(i, j) for i in range(n)]
                + [e_label(j)] + [a_label(i, j) for i in range(n)])

    def others(self, j: int) -> list[str]:
        """Z_{-j}: every non-flag register outside player j."""
        return [lbl for p in range(self.k) if p != j for lbl in self.player_registers(p)]

    def coordinate_inputs(self, i: int) -> list[str]:
        return [x_label(i, j) for j in range(self.k)]


@dataclass
class ReductionReport:
    lam: float
    log_inv_lambda: float
    win_probs: list[float]
    divergences: list[float]
    mutual_infos: list[list[float]]
    delta: list[float]
    coordinate: int | None = None
    protocol: str | None = None
    expected_gap: float | None = None
    rounding_bound: float | None = None
    k_f0_f1: float | None = None
    pr_f0: float | None = None
    pr_f1: float | None = None
    kappa: float | None = None
    kappa_floor: float | None = None
    checks: dict[str, bool] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["checks"] = dict(self.checks)
        return out


# --------------------------------------------------------------------------
# tensor helpers


def _layout(inputs, outputs, e_dims, n, flags=()):
    k = len(inputs)
    regs = [(x_label(i, j), inputs[j]) for i in range(n) for j in range(k)]
    regs += [(xp_label(i, j), inputs[j]) for i in range(n) for j in range(k)]
    regs += [(e_label(j), e_dims[j]) for j in range(k)]
    regs += [(a_label(i, j), outputs[j]) for i in range(n) for j in range(k)]
    regs += [(r_label(i), 2) for i in flags]
    return regs


def _check_size(regs):
    total = math.prod(d for _, d in regs)
    check_count(total, ADVICE_DIM_LIMIT, "advice state dimension")
    return total


def _to_layout(amp: np.ndarray, inputs, outputs, e_dims, n) -> np.ndarray:
    """Player-symbol amplitudes amp[x_0..x_{k-1}, a_0..a_{k-1}, e_0..e_{k-1}]
    to the X, X', E, A layout, with X' a copy of X."""
    k = len(inputs)
    shape = ([inputs[j] for j in range(k) for _ in range(n)]
             + [outputs[j] for j in range(k) for _ in range(n)] + list(e_dims))
    t = amp.reshape(shape)
    # digit axes are (player, coordinate); the layout wants (coordinate, player)
    x_axes = [j * n + i for i in range(n) for j in range(k)]
    a_axes = [k * n + j * n + i for i in range(n) for j in range(k)]
    e_axes = [2 * k * n + j for j in range(k)]
    t = t.transpose(x_axes + e_axes + a_axes)
    dx = math.prod(inputs) ** n
    body = t.reshape(dx, -1)
    full = np.zeros((dx, dx, body.shape[1]), dtype=complex)
    full[np.arange(dx), np.arange(dx)] = body
    return full.reshape(-1)


def _apply_on_coordinate(t: np.ndarray, labels, i: int, ops: np.ndarray, k: int) -> np.ndarray:
    """Apply ops[u] to A_(i,.) on the branch where X_(i,.) = u.

    ``t`` has one axis per register in ``labels``; ``ops`` has shape
    (X_0, ..., X_{k-1}, D, D) with D the joint answer dimension.
    """
    pos = {lbl: p for p, lbl in enumerate(labels)}
    xa = [pos[x_label(i, j)] for j in range(k)]
    aa = [pos[a_label(i, j)] for j in range(k)]
    moved = np.moveaxis(t, xa + aa, list(range(2 * k)))
    shape = moved.shape
    nu = math.prod(shape[:k])
    d = math.prod(shape[k:2 * k])
    body = moved.reshape(nu, d, -1)
    out = np.einsum("uab,ubr->uar", ops.reshape(nu, d, d), body)
    return np.moveaxis(out.reshape(shape), list(range(2 * k)), xa + aa)


def _answer_expectation(t: np.ndarray, labels, i: int, op: np.ndarray, k: int) -> float:
    """<t| op on A_(i,.) |t>, whatever the input registers hold."""
    pos = {lbl: p for p, lbl in enumerate(labels)}
    aa = [pos[a_label(i, j)] for j in range(k)]
    moved = np.moveaxis(t, aa, list(range(k)))
    body = moved.reshape(op.shape[0], -1)
    return float(np.vdot(body, op @ body).real)


def _verifier_ops(base: CQGame, fn=None) -> np.ndarray:
    ops = np.stack([base.V(x) for x in np.ndindex(*base.inputs)])
    if fn is not None:
        ops = np.stack([matrix_function_psd(v, fn) for v in ops])
    return ops.reshape(base.inputs + ops.shape[1:])


def _with_tensor(adv_state: LabeledState):
    return adv_state.data.reshape(adv_state.layout.dims), list(adv_state.labels)


def _mu_n(base: CQGame, n: int) -> np.ndarray:
    """mu^n over player symbols (coordinate 0 most significant)."""
    mu = base.mu_joint()
    k = base.k
    joint = np.ones(())
    for _ in range(n):
        joint = np.multiply.outer(joint, mu)
    order = [c * k + j for j in range(k) for c in range(n)]
    return joint.transpose(order).reshape(tuple(d ** n for d in base.inputs))


# --------------------------------------------------------------------------
# construction and conditioning


def build_psi0(g: Game, n: int, s: QuantumStrategy) -> AdviceState:
    """sum_x sqrt(mu^n(x)) |x x> sum_a (x)_j sqrt(M^j_{x_j a_j}) |xi> |a>."""
    gn = repeat(g, n)
    s.check_game(gn)
    k = g.k
    regs = _layout(g.inputs, g.outputs, s.e_dims, n)
    _check_size(regs)
    roots = []
    for p in s.povms:
        xs, as_, d, _ = p.shape
        roots.append(np.stack([np.stack([matrix_function_psd(p[x, a], np.sqrt) for a in range(as_)])
                               for x in range(xs)]))
    xi = s.state.reshape(s.e_dims)
    # einsum: xi[f_0..], roots_j[x_j, a_j, e_j, f_j] -> amp[x.., a.., e..]
    letters = iter("abcdefghijklmnopqrstuvwxyz")
    f = [next(letters) for _ in range(k)]
    x = [next(letters) for _ in range(k)]
    a = [next(letters) for _ in range(k)]
    e = [next(letters) for _ in range(k)]
    spec = ",".join(["".join(f)] + [x[j] + a[j] + e[j] + f[j] for j in range(k)])
    amp = np.einsum(spec + "->" + "".join(x + a + e), xi, *roots, optimize=True)
    base = lift_classical_game(g)
    mu = np.sqrt(_mu_n(base, n))
    amp = amp * mu.reshape(mu.shape + (1,) * (2 * k))
    vec = _to_layout(amp, g.inputs, g.outputs, s.e_dims, n)
    state = LabeledState.pure(regs, vec)
    return AdviceState(state, base, n, "none", 1.0)


def _condition(adv: AdviceState, coords: Sequence[int], event: str) -> AdviceState:
    t, labels = _with_tensor(adv.state)
    ops = _verifier_ops(adv.base, np.sqrt)
    for i in coords:
        t = _apply_on_coordinate(t, labels, i, ops, adv.k)
    lam = float(np.vdot(t, t).real)
    if lam <= 1e-300:
        raise UndefinedState(f"the event {event!r} has probability zero")
    state = LabeledState(adv.state.layout, t.reshape(-1) / math.sqrt(lam))
    return AdviceState(state, adv.base, adv.n, event, min(1.0, lam * adv.lam), adv.flags, adv.inputs_fixed)


def condition_win_all(adv: AdviceState) -> AdviceState:
    """Project onto answers that win every coordinate; lambda is Pr(win all)."""
    return _condition(adv, range(adv.n), "win-all")


def condition_win_subset(adv: AdviceState, coords: Sequence[int]) -> AdviceState:
    coords = sorted(set(int(i) for i in coords))
    if any(not 0 <= i < adv.n for i in coords):
        raise InvariantViolation(f"coordinates must lie in [0, {adv.n})")
    out = _condition(adv, coords, "win-subset:" + ",".join(map(str, coords)))
    return AdviceState(out.state, out.base, out.n, out.event, out.lam, out.flags, tuple(coords))


def build_psi_cq(g: CQGame, n: int, s: CQStrategy, coords: Sequence[int] = ()) -> LabeledState:
    """sum_x sqrt(mu^n(x)) |xx> sum_r sqrt(V^r_{x_C}) |xi_x> |r> with one flag per coordinate in C."""
    k = g.k
    coords = sorted(set(int(i) for i in coords))
    a1 = g.answer_dims
    if s.k != k or tuple(s.a_dims) != tuple(d ** n for d in a1):
        raise InvariantViolation("strategy registers do not match the repeated game")
    regs = _layout(g.inputs, a1, s.e_dims, n, coords)
    _check_size(regs)
    # xi_x over player symbols: amp[x.., e_0, A_0, e_1, A_1 ...]
    xi = s.state.reshape([v for j in range(k) for v in (s.e_dims[j], s.a_dims[j])])
    letters = iter("abcdefghijklmnopqrstuvwxyz")
    x = [next(letters) for _ in range(k)]
    ea = [next(letters) + next(letters) for _ in range(k)]
    ea2 = [next(letters) + next(letters) for _ in range(k)]
    ws = [u.reshape(u.shape[0], s.e_dims[j], s.a_dims[j], s.e_dims[j], s.a_dims[j])
          for j, u in enumerate(s.unitaries)]
    spec = ",".join(["".join(ea)] + [x[j] + ea2[j] + ea[j] for j in range(k)])
    out = "".join(x) + "".join(p[1] for p in ea2) + "".join(p[0] for p in ea2)
    amp = np.einsum(spec + "->" + out, xi, *ws, optimize=True)
    mu = np.sqrt(_mu_n(g, n))
    amp = amp * mu.reshape(mu.shape + (1,) * (2 * k))
    vec = _to_layout(amp, g.inputs, a1, s.e_dims, n)
    base_regs = _layout(g.inputs, a1, s.e_dims, n)
    t = vec.reshape([d for _, d in base_regs])
    labels = [lbl for lbl, _ in base_regs]
    accept = _verifier_ops(g, np.sqrt)
    reject = np.stack([matrix_function_psd(np.eye(g.dim) - g.V(u), np.sqrt)
                       for u in np.ndindex(*g.inputs)]).reshape(accept.shape)
    for i in coords:
        t = np.stack([_apply_on_coordinate(t, labels, i, reject, k),
                      _apply_on_coordinate(t, labels, i, accept, k)], axis=-1)
        labels.append(r_label(i))
    return LabeledState.pure(regs, t.reshape(-1))


def condition_win_subset_cq(g: CQGame, n: int, s: CQStrategy, coords: Sequence[int]) -> AdviceState:
    """The win-C conditioned state with its R flags set to 1; lambda = Pr(Win C)."""
    coords = sorted(set(int(i) for i in coords))
    if any(not 0 <= i < n for i in coords):
        raise InvariantViolation(f"coordinates must lie in [0, {n})")
    psi = build_psi_cq(g, n, s, coords)
    t = psi.data.reshape(psi.layout.dims)
    idx = (Ellipsis,) + (1,) * len(coords) if coords else (Ellipsis,)
    kept = np.zeros_like(t)
    kept[idx] = t[idx]
    lam = float(np.vdot(kept, kept).real)
    if lam <= 1e-300:
        raise UndefinedState("Win C has probability zero")
    state = LabeledState(psi.layout, kept.reshape(-1) / math.sqrt(lam))
    return AdviceState(state, g, n, "win-subset:" + ",".join(map(str, coords)), min(1.0, lam),
                       tuple(coords), tuple(coords))


# --------------------------------------------------------------------------
# measurements


def coordinate_win_prob(state: LabeledState, base: CQGame, i: int) -> float:
    t, labels = _with_tensor(state)
    vt = _apply_on_coordinate(t, labels, i, _verifier_ops(base), base.k)
    return float(np.vdot(t, vt).real / max(state.trace(), 1e-300))


def _coordinate_distribution(state: LabeledState, labels: Sequence[str]) -> np.ndarray:
    dist = basis_distribution(state, labels)
    order = [state.labels.index(lbl) for lbl in labels]
    perm = [sorted(order).index(o) for o in order]
    dist = np.transpose(dist, perm)
    return dist / dist.sum()


def measure_properties(adv: AdviceState) -> ReductionReport:
    """Per coordinate: win probability, input divergence from mu, and the
    per-player mutual informations I(X_(i,j) : Z_-j)."""
    phi = adv.state
    mu = adv.base.mu_joint()
    wins, divs, mis, deltas = [], [], [], []
    for i in range(adv.n):
        wins.append(min(1.0, max(0.0, coordinate_win_prob(phi, adv.base, i))))
        dist = _coordinate_distribution(phi, adv.coordinate_inputs(i))
        divs.append(max(0.0, classical_relative_entropy(dist.reshape(-1), mu.reshape(-1))))
        row = [max(0.0, mutual_information(phi, [x_label(i, j)], adv.others(j))) for j in range(adv.k)]
        mis.append(row)
        deltas.append(max([divs[-1]] + row))
    return ReductionReport(adv.lam, max(0.0, -math.log2(adv.lam)), wins, divs, mis, deltas)


def _protocol_a(phi: LabeledState, adv: AdviceState, i: int) -> dict:
    """Rounding on coordinate i of ``phi`` and the single-game play it induces."""
    k = adv.k
    inputs = adv.coordinate_inputs(i)
    locals_ = [adv.player_registers(j) for j in range(k)]
    rr = strategy_rounding(phi, inputs, locals_)
    dist = rr.input_distribution / rr.input_distribution.sum()
    mu = adv.base.mu_joint()
    vops = _verifier_ops(adv.base)
    labels = list(phi.labels)
    p0 = coordinate_win_prob(phi, adv.base, i)
    tau = kappa = 0.0
    for u in product(*[range(d) for d in adv.base.inputs]):
        if dist[u] <= 0 and mu[u] <= 0:
            continue
        rotated = apply_rounding(phi, rr.unitaries, locals_, u)
        t = rotated.data.reshape(rotated.layout.dims)
        acc = _answer_expectation(t, labels, i, vops[u], k)
        tau += dist[u] * acc
        kappa += mu[u] * acc
    return {"p0": p0, "tau": tau, "kappa": kappa, "gap": rr.expected_gap, "bound": rr.bound}


def round_and_play(adv: AdviceState, i: int, strict: bool = False) -> ReductionReport:
    """Strategy rounding on coordinate i, then one play of the single game.

    Protocol A when no coordinate inputs are fixed; otherwise Protocol B:
    the rounding is done on each input-conditioned branch phi_{x_C} and the
    results are averaged over x_C drawn from phi.
    """
    if adv.event == "none":
        raise InvariantViolation("round_and_play needs a conditioned advice state")
    if not 0 <= i < adv.n:
        raise InvariantViolation(f"coordinate {i} outside [0, {adv.n})")
    report = measure_properties(adv)
    fixed = [c for c in adv.inputs_fixed if c != i]
    if i in adv.inputs_fixed or not fixed:
        parts = [(1.0, _protocol_a(adv.state, adv, i))]
        protocol = "A"
    else:
        labels = [x_label(c, j) for c in fixed for j in range(adv.k)]
        dist = _coordinate_distribution(adv.state, labels)
        parts = []
        for xc in np.ndindex(*dist.shape):
            if dist[xc] <= 1e-15:
                continue
            branch = conditioned(adv.state, labels, xc)
            parts.append((float(dist[xc]), _protocol_a(branch, adv, i)))
        protocol = "B"
    agg = {key: math.fsum(w * p[key] for w, p in parts) for key in parts[0][1]}
    p0 = min(1.0, max(0.0, agg["p0"]))
    tau = min(1.0, max(0.0, agg["tau"]))
    kf = classical_bures_sq([p0, 1 - p0], [tau, 1 - tau])
    report.coordinate = i
    report.protocol = protocol
    report.expected_gap = agg["gap"]
    report.rounding_bound = agg["bound"]
    report.k_f0_f1 = kf
    report.pr_f0 = p0
    report.pr_f1 = tau
    report.kappa = agg["kappa"]
    report.kappa_floor = p0 - 4 * kf - 4 * report.divergences[i]
    report.checks = {
        "outcome_gap_le_rounding_gap": kf <= agg["gap"] + CHAIN_TOL,
        "rounding_gap_le_bound": agg["gap"] <= agg["bound"] + CHAIN_TOL,
        "kappa_ge_floor": report.kappa >= report.kappa_floor - CHAIN_TOL,
    }
    if strict and not (report.checks["outcome_gap_le_rounding_gap"] and report.checks["rounding_gap_le_bound"]):
        raise InvariantViolation(f"rounding chain failed: K(F0,F1)={kf:.3g}, "
                                 f"E K={agg['gap']:.3g}, bound={agg['bound']:.3g}")
    return report


# --------------------------------------------------------------------------
# classical Protocol C


@dataclass
class ProtocolCResult:
    omega: float
    kappa: float
    delta: float  # E_{i not in C} E_{(x_C, a_C)} S(phi^{X_i}_{x_C a_C} || mu)
    delta_bound: float  # 2 (log 1/lambda + 2|C| s k) / |C-bar|
    lam: float
    factorization_error: float
    conditional_factorization_error: float
    support_points: int
    mode: str
    std_error: float = 0.0

    @property
    def holds(self) -> bool:
        return self.kappa >= self.omega - 4 * self.delta - 1e-12 - 3 * self.std_error

    def to_json(self) -> dict:
        out = asdict(self)
        out["holds"] = self.holds
        return out


def _classical_tables(g: Game, n: int, s: ClassicalStrategy):
    """Per player: (x digits (X_j^n, n), a digits (X_j^n, n))."""
    s.check(repeat(g, n))
    out = []
    for j, (t, xd, ad) in enumerate(zip(s.tables, g.inputs, g.outputs)):
        xs = np.arange(xd ** n)
        out.append((split_digits(xs, xd, n), split_digits(t, ad, n)))
    return out


def protocol_c_classical(g: Game, n: int, s: ClassicalStrategy, coords: Sequence[int],
                         exact: bool = True, samples: int = 100_000, seed: int = 0) -> ProtocolCResult:
    """Classical conditioning on Win C and the single-game Protocol C.

    ``coords`` are 0-based coordinates. Exact mode enumerates every input,
    coordinate and shared-randomness value.
    """
    k = g.k
    coords = sorted(set(int(c) for c in coords))
    if any(not 0 <= c < n for c in coords):
        raise InvariantViolation(f"coordinates must lie in [0, {n})")
    rest = [i for i in range(n) if i not in coords]
    if not rest:
        raise InvariantViolation("Protocol C needs a coordinate outside C")
    sizes = [xd ** n for xd in g.inputs]
    check_count(math.prod(sizes), MATERIALIZE_LIMIT, "repeated input space")
    tabs = _classical_tables(g, n, s)
    pred = g.predicate_table().reshape(g.inputs + g.outputs).astype(bool)
    mu1 = g.mu_joint()
    psi = np.ones(())
    for c in range(n):
        psi = np.multiply.outer(psi, mu1)
    order = [c * k + j for j in range(k) for c in range(n)]
    psi = psi.transpose(order).reshape(sizes)  # over player symbols

    grids = np.meshgrid(*[np.arange(sz) for sz in sizes], indexing="ij")

    def coord_cols(i):
        xi = tuple(tabs[j][0][grids[j], i] for j in range(k))
        ai = tuple(tabs[j][1][grids[j], i] for j in range(k))
        return xi, ai

    wins = {i: pred[coord_cols(i)[0] + coord_cols(i)[1]] for i in range(n)}
    r = np.ones(sizes, dtype=bool)
    for c in coords:
        r &= wins[c]
    lam = float((psi * r).sum())
    if lam <= 0:
        raise UndefinedState("Win C has probability zero")
    phi = psi * r / lam
    omega = math.fsum(float((phi * wins[i]).sum()) for i in rest) / len(rest)

    # key (x_C, a_C) per joint input; each player's digits on C determine its part
    key = np.zeros(sizes, dtype=np.int64)
    for c in coords:
        for j in range(k):
            key = key * g.inputs[j] + tabs[j][0][grids[j], c]
            key = key * g.outputs[j] + tabs[j][1][grids[j], c]
    keys = np.unique(key[phi > 0])
    fact_err = cond_err = 0.0
    delta_terms = []
    kappa_terms = []
    mu_flat = mu1.reshape(-1)
    for kv in keys:
        cond = np.where(key == kv, phi, 0.0)
        pk = cond.sum()
        cond = cond / pk
        margs = [cond.sum(axis=tuple(a for a in range(k) if a != j)) for j in range(k)]
        prod_m = margs[0]
        for m in margs[1:]:
            prod_m = np.multiply.outer(prod_m, m)
        fact_err = max(fact_err, float(np.abs(cond - prod_m).max()))
        for i in rest:
            xi_cols = [tabs[j][0][:, i] for j in range(k)]
            # phi(x_(i,.) | key) and its divergence from mu
            dist_i = np.zeros(g.inputs)
            np.add.at(dist_i, coord_cols(i)[0], cond)
            delta_terms.append(pk / len(rest) * classical_relative_entropy(dist_i.reshape(-1), mu_flat))
            for u in np.ndindex(*g.inputs):
                # conditional factorization on the support
                if dist_i[u] > 0:
                    mask = np.ones(sizes, dtype=bool)
                    for j in range(k):
                        shape = [1] * k
                        shape[j] = sizes[j]
                        mask &= (xi_cols[j] == u[j]).reshape(shape)
                    c2 = np.where(mask, cond, 0.0) / dist_i[u]
                    pm = None
                    for j in range(k):
                        mj = margs[j] * (xi_cols[j] == u[j])
                        mj = mj / mj.sum()
                        pm = mj if pm is None else np.multiply.outer(pm, mj)
                    cond_err = max(cond_err, float(np.abs(c2 - pm).max()))
                # Protocol C play on input u
                answer_dists = []
                for j in range(k):
                    mj = margs[j] * (xi_cols[j] == u[j])
                    if mj.sum() <= 0:
                        answer_dists.append(np.full(g.outputs[j], 1.0 / g.outputs[j]))
                    else:
                        mj = mj / mj.sum()
                        answer_dists.append(np.bincount(tabs[j][1][:, i], weights=mj,
                                                        minlength=g.outputs[j]))
                joint = answer_dists[0]
                for d in answer_dists[1:]:
                    joint = np.multiply.outer(joint, d)
                win = float((joint * pred[u]).sum())
                kappa_terms.append(mu1[u] * pk / len(rest) * win)
    delta = math.fsum(delta_terms)
    s_bits = max(math.log2(a) for a in g.outputs)
    delta_bound = 2 * (math.log2(1 / lam) + 2 * len(coords) * s_bits * k) / len(rest)
    kappa = math.fsum(kappa_terms)
    std = 0.0
    mode = "exact"
    if not exact:
        kappa, std = _protocol_c_mc(g, tabs, phi, key, rest, mu1, pred, samples, seed)
        mode = "mc"
    return ProtocolCResult(omega, kappa, delta, delta_bound, lam, fact_err, cond_err,
                           int(keys.size), mode, std)


def _protocol_c_mc(g, tabs, phi, key, rest, mu1, pred, samples, seed):
    """Seeded Monte Carlo play of Protocol C (Philox counter-based stream)."""
    k = g.k
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0xC0C0])))
    sizes = phi.shape
    flat_phi = phi.reshape(-1)
    flat_key = key.reshape(-1)
    wins = np.zeros(samples)
    us = rng.choice(mu1.size, size=samples, p=mu1.reshape(-1))
    idx_i = rng.integers(0, len(rest), size=samples)
    picks = rng.choice(flat_phi.size, size=samples, p=flat_phi)
    for s_ in range(samples):
        u = np.unravel_index(us[s_], mu1.shape)
        i = rest[idx_i[s_]]
        kv = flat_key[picks[s_]]
        cond = np.where(key == kv, phi, 0.0)
        answers = []
        for j in range(k):
            mj = cond.sum(axis=tuple(a for a in range(k) if a != j)) * (tabs[j][0][:, i] == u[j])
            if mj.sum() <= 0:
                answers.append(int(rng.integers(0, g.outputs[j])))
            else:
                xj = rng.choice(sizes[j], p=mj / mj.sum())
                answers.append(int(tabs[j][1][xj, i]))
        wins[s_] = float(pred[tuple(u) + tuple(answers)])
    mean = math.fsum(wins.tolist()) / samples
    return mean, float(wins.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
