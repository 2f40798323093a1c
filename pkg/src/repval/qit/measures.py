"""Fidelity, squared Bures metric, entropies and mutual informations.

All logarithms are base 2. Relative (min-)entropies return ``math.inf`` on
support violations instead of raising.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from ..errors import InvariantViolation, LabelError, SupportViolation
from ..qmat import (
    ZERO_CUTOFF,
    LabeledState,
    hermitian_eig,
    matrix_function_psd,
    partial_trace,
    polar_unitary_via_svd,
    reduced_density,
)

SUPPORT_TOL = 1e-10


def _as_operator(x) -> np.ndarray:
    if isinstance(x, LabeledState):
        return x.data
    return np.asarray(x, dtype=complex)


def _psd_eigvals(rho: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    return np.where(w < ZERO_CUTOFF, 0.0, w)


def fidelity(rho, sigma) -> float:
    """F(rho, sigma) = tr sqrt(sqrt(rho) sigma sqrt(rho)) (not squared).

    Accepts vectors (pure states) or density matrices in any combination.
    """
    a, b = _as_operator(rho), _as_operator(sigma)
    if a.shape[0] != b.shape[0]:
        raise InvariantViolation(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 1 and b.ndim == 1:
        return float(min(abs(np.vdot(a, b)), 1.0))
    if a.ndim == 1 or b.ndim == 1:
        vec, mat = (a, b) if a.ndim == 1 else (b, a)
        val = np.real(np.vdot(vec, mat @ vec))
        return float(min(math.sqrt(max(val, 0.0)), 1.0))
    sa = matrix_function_psd(a, np.sqrt)
    inner = sa @ b @ sa
    w = _psd_eigvals(inner)
    return float(min(np.sqrt(w).sum(), 1.0))


def bures_sq(rho, sigma) -> float:
    """Squared Bures metric K = 1 - F."""
    return max(0.0, 1.0 - fidelity(rho, sigma))


def classical_fidelity(p, q) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    return float(min(np.sqrt(np.clip(p, 0, None) * np.clip(q, 0, None)).sum(), 1.0))


def classical_bures_sq(p, q) -> float:
    return max(0.0, 1.0 - classical_fidelity(p, q))


def _xlogx(w: np.ndarray) -> float:
    w = w[w > 0]
    return float(np.sum(w * np.log2(w)))


def entropy(rho) -> float:
    """von Neumann entropy in bits."""
    r = _as_operator(rho)
    if r.ndim == 1:
        return 0.0
    return max(0.0, -_xlogx(_psd_eigvals(r)))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    return max(0.0, -_xlogx(p))


def _support_projector_complement(sigma: np.ndarray):
    w, v = hermitian_eig(sigma)
    w = np.where(w < ZERO_CUTOFF, 0.0, w)
    return w, v


def relative_entropy(rho, sigma) -> float:
    """S(rho || sigma) = tr rho (log rho - log sigma); inf if supp rho is not in supp sigma."""
    r, s = _as_operator(rho), _as_operator(sigma)
    if r.ndim == 1:
        r = np.outer(r, r.conj())
    if s.ndim == 1:
        s = np.outer(s, s.conj())
    if r.shape != s.shape:
        raise InvariantViolation(f"dimension mismatch: {r.shape} vs {s.shape}")
    ws, vs = _support_projector_complement(s)
    outside = vs[:, ws == 0]
    if outside.size:
        leak = float(np.real(np.trace(outside.conj().T @ r @ outside)))
        if leak > SUPPORT_TOL * max(1.0, float(np.real(np.trace(r)))):
            return math.inf
    on = ws > 0
    r_in_sbasis = vs.conj().T @ r @ vs
    cross = float(np.sum(np.real(np.diagonal(r_in_sbasis))[on] * np.log2(ws[on])))
    val = _xlogx(_psd_eigvals(r)) - cross
    normalized = abs(np.trace(r).real - 1) < 1e-9 and abs(np.trace(s).real - 1) < 1e-9
    # Klein's inequality: only clamp rounding noise for normalized pairs
    return max(val, 0.0) if normalized else val


def classical_relative_entropy(p, q) -> float:
    p, q = np.asarray(p, dtype=float).ravel(), np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise InvariantViolation(f"length mismatch: {p.shape} vs {q.shape}")
    on = p > 0
    if np.any(q[on] <= 0):
        return math.inf
    return float(np.sum(p[on] * (np.log2(p[on]) - np.log2(q[on]))))


def relative_min_entropy(rho, sigma) -> float:
    """S_inf(rho || sigma) = log2 lambda_max(sigma^-1/2 rho sigma^-1/2), inf off-support."""
    r, s = _as_operator(rho), _as_operator(sigma)
    if r.ndim == 1:
        r = np.outer(r, r.conj())
    if s.ndim == 1:
        s = np.outer(s, s.conj())
    if r.shape != s.shape:
        raise InvariantViolation(f"dimension mismatch: {r.shape} vs {s.shape}")
    ws, vs = _support_projector_complement(s)
    outside = vs[:, ws == 0]
    if outside.size:
        leak = float(np.real(np.trace(outside.conj().T @ r @ outside)))
        if leak > SUPPORT_TOL * max(1.0, float(np.real(np.trace(r)))):
            return math.inf
    inv_sqrt = matrix_function_psd(s, lambda w: 1.0 / np.sqrt(w), support_only=True)
    sandwich = inv_sqrt @ r @ inv_sqrt
    top = float(np.linalg.eigvalsh((sandwich + sandwich.conj().T) / 2)[-1])
    if top <= 0:
        return -math.inf
    return math.log2(top)


def classical_relative_min_entropy(p, q) -> float:
    p, q = np.asarray(p, dtype=float).ravel(), np.asarray(q, dtype=float).ravel()
    on = p > 0
    if np.any(q[on] <= 0):
        return math.inf
    if not on.any():
        return -math.inf
    return float(np.log2(np.max(p[on] / q[on])))


def _labels(x) -> list[str]:
    return [x] if isinstance(x, str) else list(x)


def _marginal_entropy(s: LabeledState, labels: Sequence[str]) -> float:
    axes = s.layout.axes(labels)
    if s.is_pure:
        rho = reduced_density(s.data, s.layout.dims, axes)
    else:
        rho = partial_trace(s, labels).data
    return entropy(rho)


def mutual_information(s: LabeledState, a, b) -> float:
    """I(A:B) = H(A) + H(B) - H(AB) on the (normalized) state ``s``."""
    la, lb = _labels(a), _labels(b)
    if set(la) & set(lb):
        raise LabelError(f"overlapping label sets: {sorted(set(la) & set(lb))}")
    s = _normalize(s)
    val = _marginal_entropy(s, la) + _marginal_entropy(s, lb) - _marginal_entropy(s, la + lb)
    return max(val, 0.0)


def multipartite_mutual_information(s: LabeledState, parts: Sequence[Iterable[str]]) -> float:
    """Total correlation: sum of part entropies minus the joint entropy."""
    parts = [_labels(p) for p in parts]
    seen: set[str] = set()
    for p in parts:
        if seen & set(p):
            raise LabelError(f"overlapping parts: {sorted(seen & set(p))}")
        seen |= set(p)
    s = _normalize(s)
    joint = [label for p in parts for label in p]
    val = sum(_marginal_entropy(s, p) for p in parts) - _marginal_entropy(s, joint)
    return max(val, 0.0)


def _normalize(s: LabeledState) -> LabeledState:
    tr = s.trace()
    if abs(tr - 1.0) > 1e-12 and tr > 0:
        return s.normalized()
    return s


def uhlmann_unitary(phi_x: LabeledState, phi: LabeledState, local) -> np.ndarray:
    """Unitary U on ``local`` with |<phi_x|(U x id)|phi>| = F of the remote marginals."""
    if not (phi_x.is_pure and phi.is_pure):
        raise InvariantViolation("uhlmann_unitary needs pure states")
    if phi_x.layout != phi.layout:
        raise InvariantViolation("states must share a layout")
    axes = phi.layout.axes(local)
    rest = [i for i in range(len(phi.layout)) if i not in axes]
    dims = phi.layout.dims
    dl = int(np.prod([dims[i] for i in axes], dtype=np.int64))
    m = phi.data.reshape(dims).transpose(axes + rest).reshape(dl, -1)
    mx = phi_x.data.reshape(dims).transpose(axes + rest).reshape(dl, -1)
    # <phi_x|(U x id)|phi> = tr(U m mx^dagger)
    return polar_unitary_via_svd(m @ mx.conj().T)


def raz_check(phi: LabeledState, psi: LabeledState, coords: Sequence[str], a,
              tol: float = 1e-9) -> tuple[float, float]:
    """Return (sum_i I(X_i : A)_phi, 2 S(phi || psi)) on registers ``coords`` + ``a``.

    ``psi`` must be classical and product over ``coords`` and product with ``a``.
    """
    coords = list(coords)
    la = _labels(a)
    keep = coords + la
    phi_r = partial_trace(_normalize(phi), keep)
    psi_r = partial_trace(_normalize(psi), keep)
    _require_product_classical(psi_r, coords, la, tol)
    lhs = sum(mutual_information(phi_r, [c], la) for c in coords)
    rhs = 2.0 * relative_entropy(phi_r.data, psi_r.data)
    return lhs, rhs


def _require_product_classical(psi: LabeledState, coords, a, tol) -> None:
    rho = psi.data
    prod = None
    for c in coords:
        m = partial_trace(psi, [c]).data
        if np.abs(m - np.diag(np.diagonal(m))).max(initial=0.0) > tol:
            raise InvariantViolation(f"register {c!r} is not classical under psi")
        prod = m if prod is None else np.kron(prod, m)
    if a:
        prod = np.kron(prod, partial_trace(psi, a).data)
    # partial_trace keeps layout order; rebuild the product in that order
    order = [psi.labels.index(x) for x in list(coords) + list(a)]
    if order != sorted(order):
        dims = [psi.layout.dims[i] for i in order]
        n = len(dims)
        inv = list(np.argsort(order))
        prod = prod.reshape(dims + dims).transpose(inv + [n + i for i in inv]).reshape(rho.shape)
    if np.abs(prod - rho).max() > tol:
        raise InvariantViolation("psi is not a product over the X coordinates and A")
