"""Dense operator algebra on finite-dimensional composite quantum systems.

Matrices are stored row-major over the computational product basis with the
leftmost tensor factor most significant, so ``kron`` composes with plain
``numpy.kron`` and index arithmetic follows mixed-radix order.
"""
from __future__ import annotations

import dataclasses
from collections.abc import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
DEFAULT_DIM_BUDGET = 2048


class ValidationError(ValueError):
    """Raised when an operator or parameter fails a structural check."""


class BudgetExceeded(RuntimeError):
    """Raised when a requested dense construction exceeds the dimension budget."""


def _as_matrix(mat: np.ndarray | Sequence) -> np.ndarray:
    m = np.asarray(mat, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclasses.dataclass(frozen=True)
class TensorOperator:
    """A square matrix together with the dimension list of its tensor factors."""

    dims: tuple[int, ...]
    mat: np.ndarray

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise ValidationError(f"subsystem dimensions must be positive, got {dims}")
        m = _as_matrix(self.mat)
        total = int(np.prod(dims)) if dims else 1
        if m.shape[0] != total:
            raise ValidationError(
                f"matrix dimension {m.shape[0]} does not match prod(dims)={total}"
            )
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def dagger(self) -> "TensorOperator":
        return TensorOperator(self.dims, self.mat.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def with_dims(self, dims: Sequence[int]) -> "TensorOperator":
        """Regroup tensor factors without touching the matrix.

        Valid whenever the new dimension list has the same product; grouping or
        splitting adjacent factors preserves the row-major index.
        """
        return TensorOperator(tuple(dims), self.mat)


@dataclasses.dataclass(frozen=True)
class DensityOperator:
    """A validated density matrix: Hermitian, positive semidefinite, unit trace."""

    dims: tuple[int, ...]
    mat: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        op = TensorOperator(self.dims, self.mat)
        object.__setattr__(self, "dims", op.dims)
        object.__setattr__(self, "mat", op.mat)
        m = op.mat
        herm_dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if herm_dev > self.tol:
            raise ValidationError(f"not Hermitian within {self.tol}: deviation {herm_dev}")
        tr = np.trace(m)
        if abs(tr - 1.0) > max(self.tol, 10 * self.tol * m.shape[0]):
            raise ValidationError(f"trace {tr} differs from 1 beyond tolerance")
        evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if evals[0] < -self.tol:
            raise ValidationError(f"negative eigenvalue {evals[0]} below -{self.tol}")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def as_operator(self) -> TensorOperator:
        return TensorOperator(self.dims, self.mat)

    def with_dims(self, dims: Sequence[int]) -> "DensityOperator":
        return DensityOperator(tuple(dims), self.mat, self.tol)


@dataclasses.dataclass(frozen=True)
class Bipartition:
    """A two-block partition of subsystem indices (Alice block, Bob block)."""

    left: tuple[int, ...]
    right: tuple[int, ...]

    def __post_init__(self) -> None:
        left = tuple(int(i) for i in self.left)
        right = tuple(int(i) for i in self.right)
        if set(left) & set(right):
            raise ValidationError("bipartition blocks overlap")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def first_k(cls, n: int, k: int) -> "Bipartition":
        return cls(tuple(range(k)), tuple(range(k, n)))

    def validate(self, n_subsystems: int) -> None:
        if sorted(self.left + self.right) != list(range(n_subsystems)):
            raise ValidationError(
                f"bipartition {self.left}|{self.right} does not cover 0..{n_subsystems - 1}"
            )


def _op_of(x: TensorOperator | DensityOperator) -> TensorOperator:
    if isinstance(x, DensityOperator):
        return x.as_operator()
    return x


def kron(a: TensorOperator | DensityOperator, b: TensorOperator | DensityOperator) -> TensorOperator:
    """Tensor product; dims concatenate, left factor most significant."""
    a, b = _op_of(a), _op_of(b)
    return TensorOperator(a.dims + b.dims, np.kron(a.mat, b.mat))


def tensor(*ops: TensorOperator | DensityOperator) -> TensorOperator:
    out = _op_of(ops[0])
    for op in ops[1:]:
        out = kron(out, op)
    return out


def identity(dims: Sequence[int]) -> TensorOperator:
    dims = tuple(int(d) for d in dims)
    total = int(np.prod(dims)) if dims else 1
    return TensorOperator(dims, np.eye(total, dtype=np.complex128))


def partial_trace(op: TensorOperator | DensityOperator, traced: Iterable[int]) -> TensorOperator:
    """Trace out the listed subsystems; the kept factors retain their order.

    Tracing everything yields a 0-factor operator whose sole entry is the trace.
    """
    op = _op_of(op)
    traced = sorted(set(int(i) for i in traced))
    n = op.n_subsystems
    for i in traced:
        if not 0 <= i < n:
            raise ValidationError(f"subsystem index {i} out of range for {n} factors")
    mat = op.mat
    dims = list(op.dims)
    # peel one subsystem at a time; cheap at the dimensions this package targets
    for i in reversed(traced):
        k = len(dims)
        t = mat.reshape(dims + dims)
        t = np.trace(t, axis1=i, axis2=k + i)
        del dims[i]
        total = int(np.prod(dims)) if dims else 1
        mat = t.reshape(total, total)
    return TensorOperator(tuple(dims), mat)


def partial_transpose(op: TensorOperator | DensityOperator, side: Bipartition) -> TensorOperator:
    """Transpose the subsystems in ``side.right``, leaving ``side.left`` alone."""
    op = _op_of(op)
    n = op.n_subsystems
    side.validate(n)
    t = op.mat.reshape(op.dims + op.dims)
    axes = list(range(2 * n))
    for i in side.right:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    t = np.transpose(t, axes)
    return TensorOperator(op.dims, t.reshape(op.dim, op.dim))


def permute_subsystems(op: TensorOperator | DensityOperator, perm: Sequence[int]) -> TensorOperator:
    """Reorder tensor factors so that output slot k carries input factor perm[k]."""
    op = _op_of(op)
    n = op.n_subsystems
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise ValidationError(f"{perm} is not a permutation of 0..{n - 1}")
    new_dims = tuple(op.dims[p] for p in perm)
    t = op.mat.reshape(op.dims + op.dims)
    t = np.transpose(t, perm + [n + p for p in perm])
    return TensorOperator(new_dims, t.reshape(op.dim, op.dim))


def herm_eig(op: TensorOperator | DensityOperator, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator.

    Returns:
        (values, vectors): eigenvalues descending, eigenvectors as the matching
        columns, so op = vectors @ diag(values) @ vectors^dagger.
    """
    op = _op_of(op)
    m = op.mat
    dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if dev > tol * scale:
        raise ValidationError(f"herm_eig needs a Hermitian matrix; deviation {dev}")
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def trace_norm(op: TensorOperator | DensityOperator) -> float:
    """Sum of singular values."""
    op = _op_of(op)
    return float(np.linalg.svd(op.mat, compute_uv=False).sum())


def check_budget(total_dim: int, budget: int = DEFAULT_DIM_BUDGET, what: str = "operator") -> None:
    if total_dim > budget:
        raise BudgetExceeded(f"{what} dimension {total_dim} exceeds budget {budget}")
