"""Dense two-phase primal simplex for small equality-form LPs.

Solves ``max c.x  s.t.  A x = b, x >= 0``.

Pricing: ``rule="bland"`` uses Bland's rule throughout (lowest-index
entering and leaving variables). The default ``rule="steepest"`` prices by
reduced cost per unit column norm and drops to Bland's rule after a run of
degenerate pivots, so it terminates for the same reason Bland's rule does.

Linearly dependent rows are removed up front. At the start of each phase
the basic values are raised by a tiny deterministic amount to avoid
degenerate stalls; once optimal, the basic values for the original
right-hand side are recomputed through the B^-1 block of the tableau and
any slightly negative ones are repaired with dual simplex pivots.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg.blas import dger

from .errors import InvariantViolation

PIVOT_TOL = 1e-9
DEGENERATE_RUN = 50
PERTURBATION = 1e-7


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    iterations: int
    dropped_rows: int
    bland_pivots: int = 0


class _Tableau:
    """Rows: constraints then the objective. Columns: structural, artificial, rhs."""

    def __init__(self, a, b, tol, rule):
        m, n = a.shape
        self.t = np.zeros((m + 1, n + m + 1), order="F")
        self.t[:m, :n] = a
        self.t[:m, n:n + m] = np.eye(m)
        self.t[:m, -1] = b
        self.basis = list(range(n, n + m))
        self.m, self.n = m, n
        self.tol = tol
        self.rule = rule
        self.iterations = 0
        self.bland_pivots = 0

    def pivot(self, r, c):
        t = self.t
        t[r] /= t[r, c]
        col = t[:, c].copy()
        col[r] = 0.0
        # in-place rank-one update t -= col (x) t[r]
        dger(-1.0, col, t[r].copy(), a=t, overwrite_a=1)
        t[:, c] = 0.0
        t[r, c] = 1.0
        self.basis[r] = c
        self.iterations += 1

    def primal(self, allowed: np.ndarray, max_iter: int) -> str:
        """Minimize the objective row (reduced costs) over ``allowed`` columns."""
        t, tol, m = self.t, self.tol, self.m
        degenerate = 0
        while True:
            if self.iterations >= max_iter:
                return "iteration_limit"
            red = t[-1, :-1]
            cand = np.flatnonzero((red < -tol) & allowed)
            if cand.size == 0:
                return "optimal"
            if self.rule == "bland" or degenerate >= DEGENERATE_RUN:
                c = int(cand[0])
                self.bland_pivots += 1
            else:
                sub = t[:m, cand]
                norms = np.sqrt(np.einsum("ij,ij->j", sub, sub) + 1.0)
                c = int(cand[np.argmin(red[cand] / norms)])
            col = t[:m, c]
            pos = col > tol
            if not pos.any():
                return "unbounded"
            ratios = np.full(m, np.inf)
            ratios[pos] = t[:m, -1][pos] / col[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
            # lowest basic variable index among tied rows (Bland's leaving rule)
            r = int(ties[np.argmin([self.basis[i] for i in ties])])
            degenerate = degenerate + 1 if best <= tol else 0
            self.pivot(r, c)

    def dual(self, allowed: np.ndarray, max_iter: int) -> str:
        """Restore primal feasibility while keeping reduced costs nonnegative."""
        t, tol, m = self.t, self.tol, self.m
        while True:
            if self.iterations >= max_iter:
                return "iteration_limit"
            rhs = t[:m, -1]
            bad = np.flatnonzero(rhs < -tol)
            if bad.size == 0:
                return "optimal"
            r = int(bad[np.argmin(rhs[bad])])
            row = t[r, :-1]
            cand = np.flatnonzero((row < -tol) & allowed)
            if cand.size == 0:
                return "infeasible"
            c = int(cand[np.argmin(np.maximum(t[-1, cand], 0.0) / -row[cand])])
            self.pivot(r, c)


def independent_rows(a: np.ndarray, tol: float = PIVOT_TOL) -> np.ndarray:
    """Indices of a maximal linearly independent subset of rows (sorted)."""
    if a.shape[0] == 0 or a.shape[1] == 0:
        return np.zeros(0, dtype=np.int64)
    _, r, piv = scipy.linalg.qr(a.T, pivoting=True, mode="economic")
    diag = np.abs(np.diagonal(r))
    if diag.size == 0 or diag[0] == 0:
        return np.zeros(0, dtype=np.int64)
    rank = int((diag > tol * diag[0] * max(a.shape)).sum())
    return np.sort(piv[:rank])


def simplex_max(c, a_eq, b_eq, tol: float = PIVOT_TOL, max_iter: int = 200_000,
                rule: str = "steepest", perturb: bool = True) -> LPResult:
    if rule not in ("bland", "steepest"):
        raise InvariantViolation(f"unknown pivot rule {rule!r}")
    c = np.asarray(c, dtype=float)
    a_full = np.asarray(a_eq, dtype=float)
    b_full = np.asarray(b_eq, dtype=float)
    m0, n = a_full.shape
    if c.shape != (n,) or b_full.shape != (m0,):
        raise InvariantViolation("LP dimension mismatch")
    keep = independent_rows(a_full, tol)
    a, b = a_full[keep].copy(), b_full[keep].copy()
    m = a.shape[0]
    if m < m0:
        # dropped rows must be implied by the kept ones
        if m:
            coef = np.linalg.lstsq(a.T, a_full.T, rcond=None)[0]
            implied = coef.T @ b
        else:
            implied = np.zeros(m0)
        if np.abs(implied - b_full).max() > 1e-7 * max(1.0, np.abs(b_full).max()):
            return LPResult(np.zeros(n), float("nan"), "infeasible", 0, m0 - m)
    neg = b < 0
    a[neg] *= -1
    b[neg] *= -1
    tab = _Tableau(a, b, tol, rule)
    t = tab.t
    shift = PERTURBATION * (1.0 + np.arange(m) / max(m, 1))

    def result(status, x=None):
        x = np.zeros(n) if x is None else x
        value = float(c @ x) if status == "optimal" else float("nan")
        return LPResult(x, value, status, tab.iterations, m0 - m, tab.bland_pivots)

    def solve(cost, allowed):
        # cost is minimized; the objective row holds reduced costs and -z
        t[-1, :] = 0.0
        t[-1, :n + m] = cost
        for r, var in enumerate(tab.basis):
            if t[-1, var] != 0.0:
                t[-1] -= t[-1, var] * t[r]
        if perturb and m:
            t[:m, -1] += shift  # raises every basic value, so stays feasible
        status = tab.primal(allowed, max_iter)
        if status != "optimal" or not (perturb and m):
            return status
        # the artificial block holds B^-1; recompute basic values for the true b
        for _ in range(8):
            t[:m, -1] = t[:m, n:n + m] @ b
            t[-1, -1] = -(cost[tab.basis] @ t[:m, -1])
            status = tab.dual(allowed, max_iter)
            if status != "optimal":
                return status
            status = tab.primal(allowed, max_iter)
            if status != "optimal" or (t[:m, -1] >= -tol).all():
                return status
        return "iteration_limit"

    phase1 = np.zeros(n + m)
    phase1[n:] = 1.0
    status = solve(phase1, np.ones(n + m, dtype=bool))
    if status == "infeasible":
        return result("infeasible")
    if status != "optimal":
        return result(status)
    if phase1[tab.basis] @ t[:m, -1] > 10 * tol * max(1.0, np.abs(b).max(initial=0.0)):
        return result("infeasible")
    for r in range(m):  # zero-level artificials leave the basis
        if tab.basis[r] >= n:
            nz = np.flatnonzero(np.abs(t[r, :n]) > tol)
            if nz.size:
                tab.pivot(r, int(nz[np.argmax(np.abs(t[r, nz]))]))
    allowed = np.zeros(n + m, dtype=bool)
    allowed[:n] = True
    phase2 = np.zeros(n + m)
    phase2[:n] = -c
    status = solve(phase2, allowed)
    if status != "optimal":
        return result(status)
    x = np.zeros(n)
    for r, var in enumerate(tab.basis):
        if var < n:
            x[var] = t[r, -1]
    return result("optimal", np.clip(x, 0.0, None))
