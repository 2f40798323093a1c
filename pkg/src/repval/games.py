"""k-player games, strategies, parallel repetition and serialization.

Alphabets are ``range(size)``. In a repeated game a player's symbol is the
base-|alphabet| number whose digits are the per-coordinate symbols, with
coordinate 0 the most significant digit.
"""
from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .budget import MATERIALIZE_LIMIT, PREDICATE_DENSE_LIMIT, check_alloc, check_count
from .errors import InvariantViolation
from .qmat import complete_isometry, matrix_function_psd

MU_TOL = 1e-12
POVM_TOL = 1e-9
UNITARY_TOL = 1e-9
NS_TOL = 1e-7
CQ_EIG_TOL = 1e-10


def split_digits(values, base: int, n: int) -> np.ndarray:
    """(..., ) integers -> (..., n) digits, most significant first."""
    values = np.asarray(values, dtype=np.int64)
    out = np.empty(values.shape + (n,), dtype=np.int64)
    rest = values.copy()
    for pos in range(n - 1, -1, -1):
        out[..., pos] = rest % base
        rest //= base
    return out


def join_digits(digits, base: int) -> np.ndarray:
    digits = np.asarray(digits, dtype=np.int64)
    out = np.zeros(digits.shape[:-1], dtype=np.int64)
    for pos in range(digits.shape[-1]):
        out = out * base + digits[..., pos]
    return out


def _check_distribution(p: np.ndarray, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvariantViolation(f"{what} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > MU_TOL:
        raise InvariantViolation(f"{what} sums to {p.sum()!r}, not 1")
    return p


# --------------------------------------------------------------------------
# predicates


class _DensePredicate:
    def __init__(self, table: np.ndarray):
        self.table = np.ascontiguousarray(table, dtype=bool)

    def batch(self, xs, as_):
        return self.table[tuple(xs.T) + tuple(as_.T)]

    def dense(self):
        return self.table


class _AcceptSetPredicate:
    """Sorted flat indices of accepted (x, a) tuples."""

    def __init__(self, shape, flat):
        self.shape = tuple(shape)
        self.flat = np.unique(np.asarray(flat, dtype=np.int64))

    def batch(self, xs, as_):
        idx = np.ravel_multi_index(tuple(xs.T) + tuple(as_.T), self.shape)
        pos = np.searchsorted(self.flat, idx)
        pos = np.minimum(pos, max(len(self.flat) - 1, 0))
        return (self.flat[pos] == idx) if len(self.flat) else np.zeros(len(idx), dtype=bool)

    def dense(self):
        out = np.zeros(int(np.prod(self.shape)), dtype=bool)
        out[self.flat] = True
        return out.reshape(self.shape)


class _RepeatedPredicate:
    def __init__(self, base: "Game", n: int):
        self.base = base
        self.n = n

    def batch(self, xs, as_):
        k, n, b = self.base.k, self.n, self.base
        xd = np.stack([split_digits(xs[:, j], b.inputs[j], n) for j in range(k)], axis=-1)
        ad = np.stack([split_digits(as_[:, j], b.outputs[j], n) for j in range(k)], axis=-1)
        ok = np.ones(len(xs), dtype=bool)
        for coord in range(n):
            ok &= b.accepts_batch(xd[:, coord, :], ad[:, coord, :])
        return ok

    def dense(self):
        return None


# --------------------------------------------------------------------------
# games


@dataclass(frozen=True, eq=False)
class Game:
    """A k-player game (X, A, mu, V) with classical inputs and outputs."""

    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    mu_product: tuple[np.ndarray, ...] | None
    mu_explicit: np.ndarray | None
    predicate: object = field(repr=False)
    name: str = ""
    base: "Game | None" = field(default=None, repr=False)
    n: int = 1

    # construction -------------------------------------------------------

    @classmethod
    def from_table(cls, inputs, outputs, mu, table, name="") -> "Game":
        """``mu`` is a list of marginals (free game) or a joint array; ``table``
        is a boolean array of shape inputs + outputs."""
        inputs, outputs = tuple(map(int, inputs)), tuple(map(int, outputs))
        table = np.asarray(table, dtype=bool)
        if table.shape != inputs + outputs:
            raise InvariantViolation(f"predicate shape {table.shape} != {inputs + outputs}")
        prod_mu, joint = _parse_mu(mu, inputs)
        if table.size <= PREDICATE_DENSE_LIMIT:
            pred = _DensePredicate(table)
        else:
            pred = _AcceptSetPredicate(table.shape, np.flatnonzero(table.reshape(-1)))
        return cls(inputs, outputs, prod_mu, joint, pred, name)

    @classmethod
    def from_accept_list(cls, inputs, outputs, mu, accepted, name="") -> "Game":
        inputs, outputs = tuple(map(int, inputs)), tuple(map(int, outputs))
        shape = inputs + outputs
        acc = np.asarray(accepted, dtype=np.int64).reshape(-1, len(shape))
        if acc.size and (np.any(acc < 0) or np.any(acc >= np.array(shape))):
            raise InvariantViolation("accepted tuple out of range")
        prod_mu, joint = _parse_mu(mu, inputs)
        flat = np.ravel_multi_index(tuple(acc.T), shape) if acc.size else np.zeros(0, np.int64)
        size = int(np.prod(shape, dtype=np.int64))
        if size <= PREDICATE_DENSE_LIMIT:
            table = np.zeros(size, dtype=bool)
            table[flat] = True
            pred = _DensePredicate(table.reshape(shape))
        else:
            pred = _AcceptSetPredicate(shape, flat)
        return cls(inputs, outputs, prod_mu, joint, pred, name)

    @classmethod
    def from_function(cls, inputs, outputs, mu, fn, name="") -> "Game":
        inputs, outputs = tuple(map(int, inputs)), tuple(map(int, outputs))
        shape = inputs + outputs
        check_count(int(np.prod(shape, dtype=np.int64)), MATERIALIZE_LIMIT, "predicate table entries")
        k = len(inputs)
        table = np.zeros(shape, dtype=bool)
        for idx in np.ndindex(*shape):
            table[idx] = bool(fn(idx[:k], idx[k:]))
        return cls.from_table(inputs, outputs, mu, table, name)

    # basic properties ---------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.inputs)

    @property
    def is_free(self) -> bool:
        return self.mu_product is not None

    @property
    def s(self) -> float:
        """max_j log2 |A_j|."""
        return max(math.log2(a) for a in self.outputs)

    @property
    def n_inputs(self) -> int:
        return int(np.prod(self.inputs, dtype=np.int64))

    @property
    def n_outputs(self) -> int:
        return int(np.prod(self.outputs, dtype=np.int64))

    def mu_joint(self) -> np.ndarray:
        return _joint_mu(self.mu_product, self.mu_explicit)

    def marginals(self) -> tuple[np.ndarray, ...]:
        if self.mu_product is not None:
            return self.mu_product
        joint = self.mu_explicit
        return tuple(joint.sum(axis=tuple(i for i in range(self.k) if i != j)) for j in range(self.k))

    def product_form(self, tol: float = MU_TOL):
        """Marginals if the input distribution factorizes, else None."""
        if self.mu_product is not None:
            return self.mu_product
        margs = self.marginals()
        rebuilt = np.ones(())
        for m in margs:
            rebuilt = np.multiply.outer(rebuilt, m)
        return margs if np.abs(rebuilt - self.mu_explicit).max() <= tol else None

    # predicate access ---------------------------------------------------

    def accepts(self, x: Sequence[int], a: Sequence[int]) -> bool:
        return bool(self.accepts_batch(np.asarray([x]), np.asarray([a]))[0])

    def accepts_batch(self, xs, as_) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64).reshape(-1, self.k)
        as_ = np.asarray(as_, dtype=np.int64).reshape(-1, self.k)
        if np.any(xs < 0) or np.any(xs >= np.array(self.inputs)):
            raise InvariantViolation("input symbol out of range")
        if np.any(as_ < 0) or np.any(as_ >= np.array(self.outputs)):
            raise InvariantViolation("output symbol out of range")
        return self.predicate.batch(xs, as_)

    def predicate_table(self) -> np.ndarray:
        """Dense boolean table of shape inputs + outputs."""
        dense = self.predicate.dense()
        if dense is not None:
            return dense
        shape = self.inputs + self.outputs
        size = int(np.prod(shape, dtype=np.int64))
        check_count(size, MATERIALIZE_LIMIT, "dense predicate of repeated game")
        out = np.empty(size, dtype=bool)
        chunk = 1 << 16
        for start in range(0, size, chunk):
            flat = np.arange(start, min(size, start + chunk))
            idx = np.stack(np.unravel_index(flat, shape), axis=1)
            out[start:start + len(flat)] = self.predicate.batch(idx[:, :self.k], idx[:, self.k:])
        return out.reshape(shape)

    def weight_table(self) -> np.ndarray:
        """mu(x) V(x, a) as a float array of shape inputs + outputs."""
        table = self.predicate_table()
        mu = self.mu_joint()
        return table * mu.reshape(mu.shape + (1,) * self.k)

    def repeat(self, n: int) -> "Game":
        return repeat(self, n)


def _joint_mu(mu_product, mu_explicit) -> np.ndarray:
    if mu_explicit is not None:
        return mu_explicit
    check_alloc(int(np.prod([len(m) for m in mu_product], dtype=np.int64)), 8, "joint input distribution")
    out = np.ones(())
    for m in mu_product:
        out = np.multiply.outer(out, m)
    return out


def _repeat_mu(mu_product, mu_explicit, n):
    if mu_product is not None:
        margs = []
        for m in mu_product:
            out = np.ones(())
            for _ in range(n):
                out = np.multiply.outer(out, m)
            margs.append(out.reshape(-1))
        return tuple(margs), None
    k = mu_explicit.ndim
    check_alloc(mu_explicit.size ** n, 8, "joint input distribution of the repetition")
    joint = np.ones(())
    for _ in range(n):
        joint = np.multiply.outer(joint, mu_explicit)
    # axes are (coord, player); reorder to (player, coord)
    order = [c * k + j for j in range(k) for c in range(n)]
    inputs = tuple(d ** n for d in mu_explicit.shape)
    return None, joint.transpose(order).reshape(inputs)


def _parse_mu(mu, inputs):
    if isinstance(mu, np.ndarray) and mu.ndim == len(inputs) and mu.shape == tuple(inputs) and len(inputs) > 1:
        return None, _check_distribution(mu, "joint input distribution")
    if isinstance(mu, dict):
        if "product" in mu:
            mu = [np.asarray(m, dtype=float) for m in mu["product"]]
        else:
            joint = np.asarray(mu["explicit"], dtype=float).reshape(inputs)
            return None, _check_distribution(joint, "joint input distribution")
    margs = tuple(_check_distribution(np.asarray(m, dtype=float), f"marginal {j}") for j, m in enumerate(mu))
    if len(margs) != len(inputs) or any(len(m) != d for m, d in zip(margs, inputs)):
        raise InvariantViolation("marginal lengths do not match the input alphabets")
    return margs, None


def repeat(g: Game, n: int) -> Game:
    """The n-fold parallel repetition G^n; the predicate stays lazy."""
    if n < 1:
        raise InvariantViolation("repetition count must be >= 1")
    if n == 1:
        return g
    inputs = tuple(d ** n for d in g.inputs)
    outputs = tuple(d ** n for d in g.outputs)
    prod_mu, joint = _repeat_mu(g.mu_product, g.mu_explicit, n)
    return Game(inputs, outputs, prod_mu, joint, _RepeatedPredicate(g, n),
                f"{g.name}^{n}" if g.name else "", base=g, n=n)


def uniformize_marginal(p: np.ndarray, tv_max: float):
    """Least M whose largest-remainder rounding of M p has TV <= tv_max.

    Returns (M, counts). An already uniform marginal maps to itself.
    """
    p = np.asarray(p, dtype=float)
    if np.allclose(p, 1.0 / len(p), atol=MU_TOL, rtol=0):
        return len(p), np.ones(len(p), dtype=np.int64)
    m = 1
    while True:
        scaled = p * m
        counts = np.floor(scaled).astype(np.int64)
        short = m - int(counts.sum())
        # stable sort keeps ties in symbol order
        order = np.argsort(-(scaled - counts), kind="stable")
        counts[order[:short]] += 1
        tv = 0.5 * np.abs(counts / m - p).sum()
        if tv <= tv_max + MU_TOL:
            return m, counts
        m += 1


def uniformize(g: Game, gamma: float):
    """Free game with uniform marginals plus maps f_j: [M_j] -> X_j.

    Each f_j(uniform) is within TV gamma/k of the original marginal, so any
    strategy's value moves by at most gamma.
    """
    if gamma <= 0:
        raise InvariantViolation("gamma must be positive")
    margs = g.product_form()
    if margs is None:
        raise InvariantViolation("uniformize needs a free game (product input distribution)")
    maps = []
    for p in margs:
        _, counts = uniformize_marginal(p, gamma / g.k)
        maps.append(np.repeat(np.arange(len(p)), counts))
    sizes = tuple(len(f) for f in maps)
    table = g.predicate_table()[np.ix_(*maps)]
    mu = [np.full(s, 1.0 / s) for s in sizes]
    return Game.from_table(sizes, g.outputs, mu, table, f"{g.name}-uniform" if g.name else ""), maps


# --------------------------------------------------------------------------
# the agreement counterexample


def agreement_answer(i: int, bit: int) -> int:
    return 2 * i + bit


def build_agreement_game(k: int) -> Game:
    """Uniform input bits; player j answers (i_j, a_j) in [k] x {0,1}.

    The players win iff all i_j equal a common i and x_i is the XOR of a_j
    over the players j != i.
    """
    if k < 2:
        raise InvariantViolation("the agreement game needs k >= 2")
    outputs = (2 * k,) * k
    shape = (2,) * k + outputs
    table = np.zeros(shape, dtype=bool)
    for x in product(range(2), repeat=k):
        for i in range(k):
            for bits in product(range(2), repeat=k):
                parity = sum(bits[j] for j in range(k) if j != i) % 2
                if parity == x[i]:
                    a = tuple(agreement_answer(i, b) for b in bits)
                    table[x + a] = True
    mu = [np.array([0.5, 0.5])] * k
    return Game.from_table((2,) * k, outputs, mu, table, f"agreement{k}")


def agreement_repeated_strategy(k: int) -> "ClassicalStrategy":
    """Strategy for G^k: in coordinate l, player j answers (l, x^j_j)."""
    tables = []
    for j in range(k):
        xs = np.arange(2 ** k)
        digits = split_digits(xs, 2, k)
        own = digits[:, j]
        ans = np.stack([agreement_answer(ell, 0) + own for ell in range(k)], axis=1)
        tables.append(join_digits(ans, 2 * k))
    return ClassicalStrategy(tuple(tables))


# --------------------------------------------------------------------------
# strategies


@dataclass(frozen=True, eq=False)
class ClassicalStrategy:
    tables: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "tables", tuple(np.asarray(t, dtype=np.int64) for t in self.tables))

    @property
    def k(self):
        return len(self.tables)

    def check(self, g: Game) -> "ClassicalStrategy":
        if self.k != g.k:
            raise InvariantViolation(f"strategy for {self.k} players, game has {g.k}")
        for j, (t, xd, ad) in enumerate(zip(self.tables, g.inputs, g.outputs)):
            if t.shape != (xd,):
                raise InvariantViolation(f"player {j} table has shape {t.shape}, expected ({xd},)")
            if np.any(t < 0) or np.any(t >= ad):
                raise InvariantViolation(f"player {j} table has answers outside [0, {ad})")
        return self

    def repeat(self, g: Game, n: int) -> "ClassicalStrategy":
        """Play this strategy independently in each of n coordinates."""
        tables = []
        for t, xd, ad in zip(self.tables, g.inputs, g.outputs):
            digits = split_digits(np.arange(xd ** n), xd, n)
            tables.append(join_digits(t[digits], ad))
        return ClassicalStrategy(tuple(tables))


def _as_complex(a):
    return np.asarray(a, dtype=complex)


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    """Shared pure state on E_1 ... E_k and POVMs ``povms[j][x_j, a_j]``."""

    e_dims: tuple[int, ...]
    state: np.ndarray
    povms: tuple[np.ndarray, ...]  # player j: shape (X_j, A_j, d_j, d_j)

    def __post_init__(self):
        object.__setattr__(self, "e_dims", tuple(int(d) for d in self.e_dims))
        object.__setattr__(self, "state", _as_complex(self.state).reshape(-1))
        object.__setattr__(self, "povms", tuple(_as_complex(p) for p in self.povms))
        self.check()

    @property
    def k(self):
        return len(self.e_dims)

    def check(self) -> "QuantumStrategy":
        d = int(np.prod(self.e_dims))
        if self.state.shape != (d,):
            raise InvariantViolation(f"state has length {self.state.shape[0]}, registers need {d}")
        if abs(np.linalg.norm(self.state) - 1) > POVM_TOL:
            raise InvariantViolation("shared state is not normalized")
        for j, (p, dj) in enumerate(zip(self.povms, self.e_dims)):
            if p.ndim != 4 or p.shape[2:] != (dj, dj):
                raise InvariantViolation(f"player {j} POVM array has shape {p.shape}")
            for x in range(p.shape[0]):
                total = p[x].sum(axis=0)
                if np.abs(total - np.eye(dj)).max() > POVM_TOL:
                    raise InvariantViolation(f"player {j} input {x}: POVM does not sum to identity")
                for a in range(p.shape[1]):
                    el = p[x, a]
                    if np.abs(el - el.conj().T).max() > POVM_TOL:
                        raise InvariantViolation(f"player {j} POVM element ({x},{a}) not Hermitian")
                    if np.linalg.eigvalsh((el + el.conj().T) / 2)[0] < -POVM_TOL:
                        raise InvariantViolation(f"player {j} POVM element ({x},{a}) not PSD")
        return self

    def check_game(self, g: Game) -> "QuantumStrategy":
        if g.k != self.k:
            raise InvariantViolation("player count mismatch")
        for j, p in enumerate(self.povms):
            if p.shape[:2] != (g.inputs[j], g.outputs[j]):
                raise InvariantViolation(f"player {j} POVMs shaped {p.shape[:2]}, game needs "
                                         f"{(g.inputs[j], g.outputs[j])}")
        return self

    def repeat(self, n: int) -> "QuantumStrategy":
        """n independent copies; player j holds E_j^(1) ... E_j^(n)."""
        k = self.k
        t = np.ones(())
        for _ in range(n):
            t = np.multiply.outer(t, self.state.reshape(self.e_dims))
        order = [c * k + j for j in range(k) for c in range(n)]
        state = t.transpose(order).reshape(-1)
        povms = []
        for p in self.povms:
            xd, ad, d, _ = p.shape
            out = np.ones((1, 1, 1, 1), dtype=complex)
            for _ in range(n):
                out = np.einsum("xaij,ybkl->xyabikjl", out, p).reshape(
                    out.shape[0] * xd, out.shape[1] * ad, out.shape[2] * d, out.shape[3] * d)
            povms.append(out)
        return QuantumStrategy(tuple(d ** n for d in self.e_dims), state, tuple(povms))

    @classmethod
    def from_classical(cls, g: Game, s: ClassicalStrategy) -> "QuantumStrategy":
        """Embed a deterministic strategy: one-dimensional E_j, projectors 0/1."""
        povms = []
        for t, xd, ad in zip(s.tables, g.inputs, g.outputs):
            p = np.zeros((xd, ad, 1, 1), dtype=complex)
            p[np.arange(xd), t, 0, 0] = 1
            povms.append(p)
        return cls((1,) * g.k, np.ones(1), tuple(povms))


@dataclass(frozen=True, eq=False)
class NSBehavior:
    """Conditional distribution p[x..., a...] = p(a | x)."""

    table: np.ndarray

    @property
    def k(self):
        return self.table.ndim // 2

    def check(self, tol: float = NS_TOL) -> "NSBehavior":
        p, k = self.table, self.k
        if np.any(p < -1e-9):
            raise InvariantViolation("behavior has negative entries")
        sums = p.sum(axis=tuple(range(k, 2 * k)))
        if np.abs(sums - 1).max() > 1e-9:
            raise InvariantViolation("behavior rows do not sum to 1")
        for j in range(k):
            marg = p.sum(axis=k + j)  # drop a_j; x_j axis must not matter
            spread = np.ptp(marg, axis=j).max(initial=0.0)
            if spread > tol:
                raise InvariantViolation(f"player {j} can signal (spread {spread:.3g})")
        return self

    def subset_marginal_spread(self, subset: Sequence[int]) -> float:
        """Max change of p(a_S | x) when inputs outside S vary."""
        k = self.k
        drop = [k + j for j in range(k) if j not in subset]
        marg = self.table.sum(axis=tuple(drop)) if drop else self.table
        others = tuple(j for j in range(k) if j not in subset)
        if not others:
            return 0.0
        return float((marg.max(axis=others) - marg.min(axis=others)).max(initial=0.0))


# --------------------------------------------------------------------------
# CQ games


@dataclass(frozen=True, eq=False)
class CQGame:
    """Classical questions, quantum answers A_1 ... A_k, verification V_x.

    ``verification`` has shape (X_1, ..., X_k, D, D) with D = prod d_j, or is
    produced lazily from a base game for repetitions. In a repetition, player
    j's answer register is A_j^(1) ... A_j^(n), and registers are ordered by
    player.
    """

    inputs: tuple[int, ...]
    answer_dims: tuple[int, ...]
    mu_product: tuple[np.ndarray, ...] | None
    mu_explicit: np.ndarray | None
    verification: np.ndarray | None = field(repr=False, default=None)
    base: "CQGame | None" = field(repr=False, default=None)
    n: int = 1
    name: str = ""

    @classmethod
    def create(cls, inputs, answer_dims, mu, verification, name="", check=True) -> "CQGame":
        inputs, answer_dims = tuple(map(int, inputs)), tuple(map(int, answer_dims))
        prod_mu, joint = _parse_mu(mu, inputs)
        d = int(np.prod(answer_dims))
        v = _as_complex(verification).reshape(inputs + (d, d))
        g = cls(inputs, answer_dims, prod_mu, joint, v, name=name)
        if check:
            g.check()
        return g

    @property
    def k(self):
        return len(self.inputs)

    @property
    def dim(self) -> int:
        return int(np.prod(self.answer_dims))

    @property
    def s(self) -> float:
        return max(math.log2(d) for d in self.answer_dims)

    def mu_joint(self):
        return _joint_mu(self.mu_product, self.mu_explicit)

    @property
    def n_inputs(self):
        return int(np.prod(self.inputs, dtype=np.int64))

    def V(self, x: Sequence[int]) -> np.ndarray:
        x = tuple(int(v) for v in x)
        if self.base is None:
            return self.verification[x]
        b, n, k = self.base, self.n, self.k
        digits = [split_digits(x[j], b.inputs[j], n) for j in range(k)]
        out = np.ones((1, 1), dtype=complex)
        for c in range(n):
            out = np.kron(out, b.V([digits[j][c] for j in range(k)]))
        # coordinate-major (c, j) -> player-major (j, c)
        dims = [b.answer_dims[j] for _ in range(n) for j in range(k)]
        order = [c * k + j for j in range(k) for c in range(n)]
        m = len(dims)
        t = out.reshape(dims + dims).transpose(order + [m + o for o in order])
        return t.reshape(self.dim, self.dim)

    def check(self) -> "CQGame":
        for x in np.ndindex(*self.inputs):
            v = self.V(x)
            if np.abs(v - v.conj().T).max() > CQ_EIG_TOL:
                raise InvariantViolation(f"V_{x} is not Hermitian")
            w = np.linalg.eigvalsh((v + v.conj().T) / 2)
            if w[0] < -CQ_EIG_TOL or w[-1] > 1 + CQ_EIG_TOL:
                raise InvariantViolation(f"V_{x} eigenvalues outside [0, 1]: {w[0]:.3g}..{w[-1]:.3g}")
        return self


def repeat_cq(g: CQGame, n: int) -> CQGame:
    if n < 1:
        raise InvariantViolation("repetition count must be >= 1")
    if n == 1:
        return g
    check_alloc((g.dim ** n) ** 2, 16, "repeated verification operator")
    prod_mu, joint = _repeat_mu(g.mu_product, g.mu_explicit, n)
    return CQGame(tuple(d ** n for d in g.inputs), tuple(d ** n for d in g.answer_dims), prod_mu, joint,
                  None, base=g, n=n, name=f"{g.name}^{n}" if g.name else "")


def lift_classical_game(g: Game) -> CQGame:
    """Diagonal verification V_x = sum_a V(x, a) |a><a|."""
    table = g.predicate_table().reshape(g.inputs + (g.n_outputs,)).astype(complex)
    v = np.zeros(g.inputs + (g.n_outputs, g.n_outputs), dtype=complex)
    idx = np.arange(g.n_outputs)
    v[..., idx, idx] = table
    mu = list(g.mu_product) if g.mu_product is not None else g.mu_explicit
    return CQGame.create(g.inputs, g.outputs, mu, v, g.name)


@dataclass(frozen=True, eq=False)
class CQStrategy:
    """Shared pure state on E_1 A_1 ... E_k A_k and unitaries ``unitaries[j][x_j]``."""

    e_dims: tuple[int, ...]
    a_dims: tuple[int, ...]
    state: np.ndarray
    unitaries: tuple[np.ndarray, ...]  # player j: (X_j, e_j a_j, e_j a_j)

    def __post_init__(self):
        object.__setattr__(self, "e_dims", tuple(int(d) for d in self.e_dims))
        object.__setattr__(self, "a_dims", tuple(int(d) for d in self.a_dims))
        object.__setattr__(self, "state", _as_complex(self.state).reshape(-1))
        object.__setattr__(self, "unitaries", tuple(_as_complex(u) for u in self.unitaries))
        self.check()

    @property
    def k(self):
        return len(self.e_dims)

    def check(self) -> "CQStrategy":
        d = int(np.prod([e * a for e, a in zip(self.e_dims, self.a_dims)]))
        if self.state.shape != (d,):
            raise InvariantViolation(f"state has length {self.state.shape[0]}, registers need {d}")
        if abs(np.linalg.norm(self.state) - 1) > UNITARY_TOL:
            raise InvariantViolation("shared state is not normalized")
        for j, u in enumerate(self.unitaries):
            dj = self.e_dims[j] * self.a_dims[j]
            if u.ndim != 3 or u.shape[1:] != (dj, dj):
                raise InvariantViolation(f"player {j} unitaries have shape {u.shape}")
            for x in range(u.shape[0]):
                if np.abs(u[x].conj().T @ u[x] - np.eye(dj)).max() > UNITARY_TOL:
                    raise InvariantViolation(f"player {j} input {x}: operator is not unitary")
        return self


def lift_quantum_strategy(g: Game, s: QuantumStrategy) -> CQStrategy:
    """Naimark dilation: |e>|0> -> sum_a sqrt(M_a)|e>|a> completed to a unitary."""
    s.check_game(g)
    unitaries = []
    for p, d, ad in zip(s.povms, s.e_dims, g.outputs):
        us = []
        for x in range(p.shape[0]):
            roots = [matrix_function_psd(p[x, a], np.sqrt) for a in range(ad)]
            v = np.zeros((d * ad, d), dtype=complex)
            for a in range(ad):
                v[a::ad, :] = roots[a]
            q = complete_isometry(v)
            cols = [e * ad for e in range(d)] + [c for c in range(d * ad) if c % ad]
            u = np.empty_like(q)
            u[:, cols] = q
            us.append(u)
        unitaries.append(np.stack(us))
    k = s.k
    t = s.state.reshape(s.e_dims)
    # answer registers start in |0>, interleaved as E_1 A_1 E_2 A_2 ...
    full = np.zeros([v for j in range(k) for v in (s.e_dims[j], g.outputs[j])], dtype=complex)
    full[tuple(slice(None) if i % 2 == 0 else 0 for i in range(2 * k))] = t
    return CQStrategy(s.e_dims, g.outputs, full.reshape(-1), tuple(unitaries))


# --------------------------------------------------------------------------
# JSON


def _mu_json(mu_product, mu_explicit):
    if mu_product is not None:
        return {"product": [list(map(float, m)) for m in mu_product]}
    return {"explicit": list(map(float, np.asarray(mu_explicit).reshape(-1)))}


def game_to_json(g: Game, dense: bool | None = None) -> dict:
    table = g.predicate_table()
    if dense is None:
        dense = table.size <= PREDICATE_DENSE_LIMIT
    out = {"k": g.k, "inputs": list(g.inputs), "outputs": list(g.outputs),
           "mu": _mu_json(g.mu_product, g.mu_explicit)}
    if g.name:
        out["name"] = g.name
    if dense:
        bits = np.packbits(table.reshape(-1).astype(np.uint8))
        out["predicate"] = {"dense": base64.b64encode(bits.tobytes()).decode("ascii")}
    else:
        acc = np.argwhere(table)
        out["predicate"] = {"accept": acc.tolist()}
    return out


def game_from_json(obj: dict) -> Game:
    from .schemas import validate
    validate(obj, "game")
    inputs, outputs = tuple(obj["inputs"]), tuple(obj["outputs"])
    if not (len(inputs) == len(outputs) == obj["k"]):
        raise InvariantViolation("k does not match the alphabet lists")
    shape = inputs + outputs
    pred = obj["predicate"]
    name = obj.get("name", "")
    if "dense" in pred:
        raw = np.frombuffer(base64.b64decode(pred["dense"]), dtype=np.uint8)
        size = int(np.prod(shape, dtype=np.int64))
        bits = np.unpackbits(raw)
        if len(bits) < size or np.any(bits[size:]):
            raise InvariantViolation("dense predicate bitmap has the wrong length")
        return Game.from_table(inputs, outputs, obj["mu"], bits[:size].reshape(shape).astype(bool), name)
    return Game.from_accept_list(inputs, outputs, obj["mu"], pred["accept"], name)


def _cjson(a):
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _cparse(obj):
    a = np.asarray(obj, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def cqgame_to_json(g: CQGame) -> dict:
    if g.verification is None:
        raise InvariantViolation("serialize the base game of a repetition instead")
    return {"k": g.k, "inputs": list(g.inputs), "answer_dims": list(g.answer_dims),
            "mu": _mu_json(g.mu_product, g.mu_explicit),
            "verification": _cjson(g.verification.reshape((g.n_inputs, g.dim, g.dim)))}


def cqgame_from_json(obj: dict) -> CQGame:
    from .schemas import validate
    validate(obj, "cqgame")
    return CQGame.create(obj["inputs"], obj["answer_dims"], obj["mu"], _cparse(obj["verification"]))


def strategy_to_json(s) -> dict:
    if isinstance(s, ClassicalStrategy):
        return {"type": "classical", "tables": [t.tolist() for t in s.tables]}
    if isinstance(s, QuantumStrategy):
        return {"type": "quantum", "e_dims": list(s.e_dims), "state": _cjson(s.state),
                "povms": [_cjson(p) for p in s.povms]}
    if isinstance(s, CQStrategy):
        return {"type": "cq", "e_dims": list(s.e_dims), "a_dims": list(s.a_dims),
                "state": _cjson(s.state), "unitaries": [_cjson(u) for u in s.unitaries]}
    if isinstance(s, NSBehavior):
        return {"type": "ns", "shape": list(s.table.shape), "table": s.table.reshape(-1).tolist()}
    raise TypeError(f"cannot serialize {type(s).__name__}")


def strategy_from_json(obj: dict):
    from .schemas import validate
    validate(obj, "strategy")
    kind = obj["type"]
    if kind == "classical":
        return ClassicalStrategy(tuple(np.asarray(t, dtype=np.int64) for t in obj["tables"]))
    if kind == "quantum":
        return QuantumStrategy(tuple(obj["e_dims"]), _cparse(obj["state"]),
                               tuple(_cparse(p) for p in obj["povms"]))
    if kind == "cq":
        return CQStrategy(tuple(obj["e_dims"]), tuple(obj["a_dims"]), _cparse(obj["state"]),
                          tuple(_cparse(u) for u in obj["unitaries"]))
    return NSBehavior(np.asarray(obj["table"], dtype=float).reshape(obj["shape"])).check()


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
