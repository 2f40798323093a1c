"""Dense complex matrices and labeled multi-register quantum states.

States are stored densely: a pure body is a complex vector, a mixed body a
density matrix. Register order in a :class:`RegisterLayout` is the tensor
factor order (first register is most significant in the flat index).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .budget import check_alloc
from .errors import InvariantViolation, LabelError, SupportViolation

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
ZERO_CUTOFF = 1e-12


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(label), int(dim)) for label, dim in self.registers)
        labels = [label for label, _ in regs]
        if len(set(labels)) != len(labels):
            dup = sorted({x for x in labels if labels.count(x) > 1})
            raise LabelError(f"duplicate register labels: {dup}")
        for label, dim in regs:
            if dim < 1:
                raise InvariantViolation(f"register {label!r} has dimension {dim}")
        object.__setattr__(self, "registers", regs)

    @classmethod
    def of(cls, *pairs):
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.registers)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.registers else 1

    def __len__(self):
        return len(self.registers)

    def __contains__(self, label):
        return label in self.labels

    def axes(self, labels: Iterable[str]) -> list[int]:
        """Axis positions of ``labels`` (in layout order), validating membership."""
        wanted = _as_label_set(labels)
        index = {label: i for i, label in enumerate(self.labels)}
        missing = [label for label in wanted if label not in index]
        if missing:
            raise LabelError(f"unknown register label(s): {sorted(missing)}")
        return sorted(index[label] for label in wanted)

    def dim_of(self, labels: Iterable[str]) -> int:
        return int(np.prod([self.dims[i] for i in self.axes(labels)], dtype=np.int64))

    def restrict(self, labels: Iterable[str]) -> "RegisterLayout":
        return RegisterLayout(tuple(self.registers[i] for i in self.axes(labels)))

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LabelError(f"label collision: {sorted(clash)}")
        return RegisterLayout(self.registers + other.registers)


def _as_label_set(labels) -> list[str]:
    if isinstance(labels, str):
        return [labels]
    out = []
    for label in labels:
        if label not in out:
            out.append(label)
    return out


@dataclass(frozen=True)
class LabeledState:
    """Pure (vector) or mixed (density matrix) state over named registers.

    Bodies may be subnormalized; conditioning leaves the trace below one.
    """

    layout: RegisterLayout
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        d = self.layout.dim
        if data.ndim == 1:
            if data.shape != (d,):
                raise InvariantViolation(f"vector of length {data.shape[0]} for layout of dim {d}")
        elif data.ndim == 2:
            if data.shape != (d, d):
                raise InvariantViolation(f"matrix of shape {data.shape} for layout of dim {d}")
        else:
            raise InvariantViolation("state body must be a vector or a square matrix")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def pure(cls, registers, vector) -> "LabeledState":
        layout = registers if isinstance(registers, RegisterLayout) else RegisterLayout(tuple(registers))
        return cls(layout, np.asarray(vector, dtype=complex).ravel())

    @classmethod
    def mixed(cls, registers, matrix) -> "LabeledState":
        layout = registers if isinstance(registers, RegisterLayout) else RegisterLayout(tuple(registers))
        return cls(layout, np.asarray(matrix, dtype=complex))

    @classmethod
    def basis(cls, registers, values: Sequence[int]) -> "LabeledState":
        layout = registers if isinstance(registers, RegisterLayout) else RegisterLayout(tuple(registers))
        vec = np.zeros(layout.dim, dtype=complex)
        vec[np.ravel_multi_index(tuple(values), layout.dims)] = 1.0
        return cls(layout, vec)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def labels(self):
        return self.layout.labels

    def trace(self) -> float:
        if self.is_pure:
            return float(np.vdot(self.data, self.data).real)
        return float(np.trace(self.data).real)

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def normalized(self) -> "LabeledState":
        tr = self.trace()
        if tr <= 0:
            raise InvariantViolation("cannot normalize a zero state")
        scale = 1.0 / np.sqrt(tr) if self.is_pure else 1.0 / tr
        return LabeledState(self.layout, self.data * scale)

    def tensor(self) -> np.ndarray:
        """The pure body reshaped to one axis per register."""
        if not self.is_pure:
            raise InvariantViolation("tensor view needs a pure state")
        return self.data.reshape(self.layout.dims)

    def check(self, tol: float = PSD_TOL) -> "LabeledState":
        """Verify the density invariants (PSD, trace <= 1); returns self."""
        if self.is_pure:
            if not np.all(np.isfinite(self.data)):
                raise InvariantViolation("non-finite amplitudes")
            if self.trace() > 1 + tol:
                raise InvariantViolation(f"pure body norm^2 {self.trace()} exceeds 1")
            return self
        check_hermitian(self.data)
        w = np.linalg.eigvalsh(self.data)
        if w.min() < -tol:
            raise InvariantViolation(f"density has eigenvalue {w.min():.3e}")
        if w.sum() > 1 + tol:
            raise InvariantViolation(f"density trace {w.sum()} exceeds 1")
        return self


def check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvariantViolation(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    dev = float(np.abs(m - m.conj().T).max(initial=0.0))
    if dev > tol * scale:
        raise InvariantViolation(f"matrix is not Hermitian (max deviation {dev:.3e})")


def tensor_product(a, b):
    """Kronecker product of matrices, or of labeled states (layouts concatenate)."""
    if isinstance(a, LabeledState) and isinstance(b, LabeledState):
        layout = a.layout.concat(b.layout)
        if a.is_pure and b.is_pure:
            return LabeledState(layout, np.kron(a.data, b.data))
        return LabeledState(layout, np.kron(a.density(), b.density()))
    if isinstance(a, LabeledState) or isinstance(b, LabeledState):
        raise TypeError("cannot mix labeled states and bare matrices")
    return np.kron(np.asarray(a), np.asarray(b))


def reduced_density(vector: np.ndarray, dims: Sequence[int], keep_axes: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure vector on ``keep_axes`` (sorted)."""
    keep_axes = list(keep_axes)
    rest = [i for i in range(len(dims)) if i not in keep_axes]
    dk = int(np.prod([dims[i] for i in keep_axes], dtype=np.int64))
    t = np.asarray(vector).reshape(dims).transpose(keep_axes + rest).reshape(dk, -1)
    return t @ t.conj().T


def _trace_out_matrix(rho: np.ndarray, dims: Sequence[int], keep_axes: Sequence[int]) -> np.ndarray:
    n = len(dims)
    keep_axes = list(keep_axes)
    rest = [i for i in range(n) if i not in keep_axes]
    dk = int(np.prod([dims[i] for i in keep_axes], dtype=np.int64))
    dr = int(np.prod([dims[i] for i in rest], dtype=np.int64))
    t = rho.reshape(tuple(dims) + tuple(dims))
    perm = keep_axes + rest + [n + i for i in keep_axes] + [n + i for i in rest]
    t = t.transpose(perm).reshape(dk, dr, dk, dr)
    return np.einsum("iaja->ij", t)


def partial_trace(s: LabeledState, keep) -> LabeledState:
    """Trace out every register not in ``keep``; result is a density state."""
    axes = s.layout.axes(keep)
    layout = RegisterLayout(tuple(s.layout.registers[i] for i in axes))
    if s.is_pure:
        rho = reduced_density(s.data, s.layout.dims, axes)
    elif len(axes) == len(s.layout):
        rho = s.data
    else:
        rho = _trace_out_matrix(s.data, s.layout.dims, axes)
    return LabeledState(layout, rho)


def basis_distribution(s: LabeledState, labels) -> np.ndarray:
    """Outcome probabilities of measuring ``labels`` in the computational basis.

    Returned with one axis per measured register, in layout order.
    """
    axes = s.layout.axes(labels)
    dims = s.layout.dims
    if s.is_pure:
        probs = np.abs(s.data.reshape(dims)) ** 2
        rest = tuple(i for i in range(len(dims)) if i not in axes)
        return probs.sum(axis=rest) if rest else probs
    diag = np.real(np.diagonal(partial_trace(s, [s.labels[i] for i in axes]).data))
    return diag.reshape([dims[i] for i in axes])


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and unitary eigenvector columns of a Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    check_hermitian(m)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def matrix_function_psd(m: np.ndarray, f: Callable[[np.ndarray], np.ndarray],
                        support_only: bool = False) -> np.ndarray:
    """Apply ``f`` to the spectrum of a PSD matrix.

    Eigenvalues below ``ZERO_CUTOFF`` count as exact zeros. With
    ``support_only`` those map to zero (pseudo-function, e.g. pseudo-inverse
    square root); otherwise ``f`` must be finite there. A non-finite value on
    an applied eigenvalue raises :class:`SupportViolation`.
    """
    w, v = hermitian_eig(m)
    if w.size and w.min() < -PSD_TOL * max(1.0, abs(w.max())):
        raise InvariantViolation(f"matrix is not PSD (eigenvalue {w.min():.3e})")
    w = np.where(w < ZERO_CUTOFF, 0.0, w)
    applied = w > 0 if support_only else np.ones_like(w, dtype=bool)
    fw = np.zeros_like(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(f(w[applied]), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise SupportViolation("function undefined on part of the spectrum")
    fw[applied] = vals
    return (v * fw) @ v.conj().T


def polar_unitary_via_svd(k: np.ndarray) -> np.ndarray:
    """Unitary U maximizing |tr(U k)|; then tr(U k) equals the sum of singular values."""
    k = np.asarray(k, dtype=complex)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise InvariantViolation(f"polar unitary needs a square matrix, got {k.shape}")
    w, _, vh = np.linalg.svd(k)
    # k = W S V^dagger, U = V W^dagger; full SVD completes the null space
    return vh.conj().T @ w.conj().T


def _apply_to_axes(tensor: np.ndarray, u: np.ndarray, axes: list[int], dims) -> np.ndarray:
    n = len(dims)
    rest = [i for i in range(n) if i not in axes]
    du = int(np.prod([dims[i] for i in axes], dtype=np.int64))
    t = tensor.transpose(axes + rest).reshape(du, -1)
    t = (u @ t).reshape([dims[i] for i in axes] + [dims[i] for i in rest])
    return t.transpose(np.argsort(axes + rest))


def apply_local_unitary(s: LabeledState, u: np.ndarray, on) -> LabeledState:
    """Apply ``u`` to the registers ``on`` (taken in layout order)."""
    axes = s.layout.axes(on)
    u = np.asarray(u, dtype=complex)
    du = int(np.prod([s.layout.dims[i] for i in axes], dtype=np.int64))
    if u.shape != (du, du):
        raise InvariantViolation(f"operator of shape {u.shape} on registers of dimension {du}")
    dims = s.layout.dims
    if s.is_pure:
        out = _apply_to_axes(s.data.reshape(dims), u, axes, dims).reshape(-1)
        return LabeledState(s.layout, out)
    n = len(dims)
    t = s.data.reshape(tuple(dims) + tuple(dims))
    t = _apply_to_axes(t, u, axes, tuple(dims) + tuple(dims))
    t = _apply_to_axes(t, u.conj(), [n + i for i in axes], tuple(dims) + tuple(dims))
    return LabeledState(s.layout, t.reshape(s.data.shape))


def project_component(s: LabeledState, on, basis_values: Sequence[int]):
    """Project registers ``on`` onto a computational basis string.

    Returns ``(prob, post)`` where ``post`` keeps the layout and is left
    unnormalized. ``post`` is ``None`` (undefined state) when ``prob`` is zero.
    """
    axes = s.layout.axes(on)
    values = list(basis_values)
    if len(values) != len(axes):
        raise InvariantViolation(f"{len(values)} outcome values for {len(axes)} registers")
    dims = s.layout.dims
    for ax, val in zip(axes, values):
        if not 0 <= val < dims[ax]:
            raise InvariantViolation(f"outcome {val} out of range for register {s.labels[ax]!r}")
    n = len(dims)
    if s.is_pure:
        mask = [slice(None)] * n
        for ax, val in zip(axes, values):
            mask[ax] = val
        out = np.zeros(dims, dtype=complex)
        out[tuple(mask)] = s.data.reshape(dims)[tuple(mask)]
        post = LabeledState(s.layout, out.reshape(-1))
    else:
        mask = [slice(None)] * (2 * n)
        for ax, val in zip(axes, values):
            mask[ax] = val
            mask[n + ax] = val
        out = np.zeros(tuple(dims) * 2, dtype=complex)
        src = s.data.reshape(tuple(dims) * 2)
        out[tuple(mask)] = src[tuple(mask)]
        post = LabeledState(s.layout, out.reshape(s.data.shape))
    prob = post.trace()
    if prob <= 0.0:
        return 0.0, None
    return min(max(prob, 0.0), 1.0), post


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary (QR of a Ginibre matrix with phase fix)."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    return random_unitary(d_out, rng)[:, :d_in]


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def complete_isometry(v: np.ndarray) -> np.ndarray:
    """Extend an isometry (orthonormal columns) to a unitary."""
    v = np.asarray(v, dtype=complex)
    d, r = v.shape
    check_alloc(d * d, 16, "unitary completion")
    if r == d:
        return v
    q, _ = np.linalg.qr(np.hstack([v, np.eye(d, dtype=complex)]))
    extra = q[:, r:d]
    # remove any overlap with v (qr keeps the first r columns' span)
    extra = extra - v @ (v.conj().T @ extra)
    extra, _ = np.linalg.qr(extra)
    return np.hstack([v, extra[:, : d - r]])
