"""Local Uhlmann rounding of input-indexed pure states.

Given a pure state whose input registers are classical copies (|x x'>), each
player rotates its local registers, conditioned on its own input value, so
the rotated state approximates the state conditioned on the full input.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from ..qmat import LabeledState, apply_local_unitary, basis_distribution, project_component
from .measures import mutual_information, uhlmann_unitary


@dataclass
class RoundingResult:
    unitaries: list[dict[int, np.ndarray]]
    expected_gap: float  # E_x K(phi_x, U_x phi U_x^dagger)
    mutual_infos: list[float]  # I(X_j : everything outside player j)
    input_distribution: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return len(self.unitaries)

    @property
    def bound(self) -> float:
        return 4 * self.k * sum(self.mutual_infos)


def conditioned(phi: LabeledState, labels: Sequence[str], values: Sequence[int]) -> LabeledState | None:
    prob, post = project_component(phi, labels, values)
    if post is None:
        return None
    return LabeledState(post.layout, post.data / np.sqrt(prob))


def rounding_unitaries(phi: LabeledState, inputs: Sequence[str],
                       locals_: Sequence[Sequence[str]]) -> list[dict[int, np.ndarray]]:
    """Per player j and input value u: Uhlmann unitary on ``locals_[j]``
    taking phi towards phi conditioned on ``inputs[j] = u``."""
    out = []
    for x_label, local in zip(inputs, locals_):
        dim = phi.layout.dim_of([x_label])
        table = {}
        for u in range(dim):
            target = conditioned(phi, [x_label], [u])
            if target is None:
                continue
            table[u] = uhlmann_unitary(target, phi, local)
        out.append(table)
    return out


def apply_rounding(phi: LabeledState, unitaries, locals_, x: Sequence[int]) -> LabeledState:
    state = phi
    for table, local, u in zip(unitaries, locals_, x):
        if u in table:
            state = apply_local_unitary(state, table[u], local)
    return state


def strategy_rounding(phi: LabeledState, inputs: Sequence[str],
                      locals_: Sequence[Sequence[str]]) -> RoundingResult:
    """Build the per-player unitaries and measure the rounding gap and its bound."""
    phi = phi.normalized()
    unitaries = rounding_unitaries(phi, inputs, locals_)
    dist = basis_distribution(phi, inputs)
    order = phi.layout.axes(inputs)
    # basis_distribution returns layout order; map back to the order of `inputs`
    perm = [sorted(order).index(phi.labels.index(lbl)) for lbl in inputs]
    dist = np.transpose(dist, perm)
    gap = 0.0
    for x in product(*[range(d) for d in dist.shape]):
        p = float(dist[x])
        if p <= 0:
            continue
        target = conditioned(phi, inputs, x)
        if target is None:
            continue
        rotated = apply_rounding(phi, unitaries, locals_, x)
        overlap = abs(np.vdot(target.data, rotated.data))
        gap += p * max(0.0, 1.0 - overlap)
    mis = []
    for x_label, local in zip(inputs, locals_):
        remote = [lbl for lbl in phi.labels if lbl not in set(local)]
        mis.append(mutual_information(phi, [x_label], remote) if remote else 0.0)
    return RoundingResult(unitaries, gap, mis, dist)


def random_cq_purification(k: int, x_dims: Sequence[int], a_dims: Sequence[int], b_dim: int,
                           rng: np.random.Generator, product_inputs: bool = False) -> LabeledState:
    """Random |phi> = sum_x sqrt(mu(x)) |x x>^{XX'} |phi_x>^{AB}.

    Registers are grouped by player: X_j, X'_j, A_j for each j, then B.
    """
    if product_inputs:
        margs = [rng.dirichlet(np.ones(d)) for d in x_dims]
        mu = margs[0]
        for m in margs[1:]:
            mu = np.multiply.outer(mu, m)
    else:
        mu = rng.dirichlet(np.ones(int(np.prod(x_dims)))).reshape(x_dims)
    regs = []
    for j in range(k):
        regs += [(f"X{j}", x_dims[j]), (f"Xp{j}", x_dims[j]), (f"A{j}", a_dims[j])]
    regs.append(("B", b_dim))
    dims = [d for _, d in regs]
    d_ab = int(np.prod(a_dims)) * b_dim
    common = rng.standard_normal(d_ab) + 1j * rng.standard_normal(d_ab)
    spread = rng.uniform(0.0, 2.0)
    t = np.zeros(dims, dtype=complex)
    for x in product(*[range(d) for d in x_dims]):
        v = common + spread * (rng.standard_normal(d_ab) + 1j * rng.standard_normal(d_ab))
        v = v / np.linalg.norm(v)
        idx = []
        for j in range(k):
            idx += [x[j], x[j], slice(None)]
        idx.append(slice(None))
        # integer indices drop the X axes, leaving A_0..A_{k-1}, B in order
        t[tuple(idx)] = np.sqrt(mu[x]) * v.reshape(list(a_dims) + [b_dim])
    return LabeledState.pure(regs, t.reshape(-1))
