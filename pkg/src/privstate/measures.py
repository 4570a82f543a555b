"""Entropies, distance measures, and separability predicates.

All logarithms are base 2. Trace distance follows the unhalved convention
||a - b||_1; call sites that compare against halved-convention bounds divide
explicitly.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .operators import (
    Bipartition,
    DensityOperator,
    TensorOperator,
    ValidationError,
    herm_eig,
    partial_trace,
    partial_transpose,
    trace_norm,
)

EIG_CLAMP_TOL = 1e-9
SUPPORT_CUTOFF = 1e-10
ETA_MONOTONE_LIMIT = 0.367879  # 1/e, where -x log2 x stops increasing


def eta(x: float) -> float:
    """-x log2 x, continuously extended by eta(0) = 0."""
    if x < 0:
        raise ValidationError(f"eta needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    return -x * math.log2(x)


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2 (1-x) on [0, 1]."""
    if not -1e-12 <= x <= 1.0 + 1e-12:
        raise ValidationError(f"binary_entropy needs x in [0,1], got {x}")
    x = min(max(x, 0.0), 1.0)
    return eta(x) + eta(1.0 - x)


def shannon_entropy(probs) -> float:
    p = np.asarray(probs, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def fannes_bound(eps: float, dim: int) -> float:
    """Entropy continuity: |S(rho) - S(sigma)| <= eps log2(dim) + eta(eps)."""
    return eps * math.log2(dim) + eta(eps)


def alicki_fannes_bound(eps: float, dim_x: float) -> float:
    """Conditional-entropy continuity: 4 eps log2(dim_X) + h(eps)."""
    return 4.0 * eps * math.log2(dim_x) + binary_entropy(eps)


def _clamped_spectrum(rho: DensityOperator, tol: float = EIG_CLAMP_TOL) -> np.ndarray:
    vals = np.linalg.eigvalsh(rho.mat)
    if vals[0] < -tol:
        raise ValidationError(f"state has eigenvalue {vals[0]} below -{tol}")
    return np.clip(vals, 0.0, None)


def vn_entropy(rho: DensityOperator) -> float:
    """von Neumann entropy -sum lam log2 lam in bits."""
    lam = _clamped_spectrum(rho)
    lam = lam[lam > 0]
    return float(-(lam * np.log2(lam)).sum())


def relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """D(rho||sigma) = Tr rho log2 rho - Tr rho log2 sigma; +inf off sigma's support.

    Eigenvalues of sigma below SUPPORT_CUTOFF count as kernel; if rho puts more
    than SUPPORT_CUTOFF weight there the divergence is infinite.
    """
    if rho.dim != sigma.dim:
        raise ValidationError("relative_entropy needs equal dimensions")
    svals, svecs = np.linalg.eigh(sigma.mat)
    overlaps = np.real(np.einsum("ij,jk,ki->i", svecs.conj().T, rho.mat, svecs))
    kernel = svals < SUPPORT_CUTOFF
    if float(overlaps[kernel].sum()) > SUPPORT_CUTOFF:
        return math.inf
    lam = _clamped_spectrum(rho)
    lam = lam[lam > 0]
    tr_rho_log_rho = float((lam * np.log2(lam)).sum())
    sup = ~kernel
    tr_rho_log_sigma = float((overlaps[sup] * np.log2(svals[sup])).sum())
    return tr_rho_log_rho - tr_rho_log_sigma


def mutual_information(rho: DensityOperator, cut: Bipartition) -> float:
    """I(L:R) = S(L) + S(R) - S(LR) across the given bipartition."""
    cut.validate(rho.n_subsystems)
    left_op = partial_trace(rho, cut.right)
    right_op = partial_trace(rho, cut.left)
    left = DensityOperator(left_op.dims, left_op.mat, rho.tol)
    right = DensityOperator(right_op.dims, right_op.mat, rho.tol)
    return vn_entropy(left) + vn_entropy(right) - vn_entropy(rho)


def conditional_entropy(rho: DensityOperator, cond: Bipartition) -> float:
    """S(left | right) = S(rho) - S(right marginal); may be negative."""
    cond.validate(rho.n_subsystems)
    right_op = partial_trace(rho, cond.left)
    right = DensityOperator(right_op.dims, right_op.mat, rho.tol)
    return vn_entropy(rho) - vn_entropy(right)


def trace_distance(a: DensityOperator, b: DensityOperator) -> float:
    """||a - b||_1 (unhalved); in [0, 2] for states."""
    if a.dim != b.dim:
        raise ValidationError("trace_distance needs equal dimensions")
    return trace_norm(TensorOperator(a.dims, a.mat - b.mat))


def min_pt_eigenvalue(rho: DensityOperator, cut: Bipartition) -> float:
    pt = partial_transpose(rho, cut)
    return float(np.linalg.eigvalsh(pt.mat)[0])


def is_ppt(rho: DensityOperator, cut: Bipartition, tol: float = 1e-9) -> bool:
    """True iff the partial transpose across the cut has no eigenvalue below -tol."""
    return min_pt_eigenvalue(rho, cut) >= -tol


def negativity(rho: DensityOperator, cut: Bipartition) -> float:
    """(||rho^Gamma||_1 - 1) / 2: the absolute sum of negative PT eigenvalues."""
    return max(0.0, (trace_norm(partial_transpose(rho, cut)) - 1.0) / 2.0)


def log_negativity(rho: DensityOperator, cut: Bipartition) -> float:
    """log2 ||rho^Gamma||_1, clamped at 0 (PPT states have unit PT trace norm)."""
    return max(0.0, math.log2(trace_norm(partial_transpose(rho, cut))))


def pbit_log_negativity(spec) -> float:
    """Block formula for key-qubit private states: log2(1 + ||X^Gamma||_1).

    X = U_0 sigma U_1^dagger is the off-diagonal shield block; the partial
    transpose acts on Bob's shield factors.
    """
    if spec.d != 2:
        raise ValidationError("block log-negativity formula needs key dimension 2")
    x = spec.unitaries[0].mat @ spec.sigma.mat @ spec.unitaries[1].mat.conj().T
    xop = TensorOperator(spec.shield_dims, x)
    n_a = spec.n_alice_shield
    side = Bipartition(tuple(range(n_a)), tuple(range(n_a, len(spec.shield_dims))))
    return math.log2(1.0 + trace_norm(partial_transpose(xop, side)))


@dataclasses.dataclass(frozen=True)
class SortedSpectrum:
    """Eigenvalues of a state, descending, summing to one."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if any(vals[i] < vals[i + 1] for i in range(len(vals) - 1)):
            raise ValidationError("spectrum must be non-increasing")
        if abs(sum(vals) - 1.0) > 1e-8:
            raise ValidationError("spectrum must sum to 1")
        if vals and (vals[-1] < -1e-9 or vals[0] > 1.0 + 1e-9):
            raise ValidationError("spectrum entries outside [0, 1]")
        object.__setattr__(self, "values", vals)

    @classmethod
    def of_state(cls, rho: DensityOperator) -> "SortedSpectrum":
        vals, _ = herm_eig(rho)
        return cls(tuple(np.clip(vals, 0.0, None)))


def is_abs_separable_2q(rho: DensityOperator | SortedSpectrum) -> bool:
    """Two-qubit absolute-separability test: lam1 <= lam3 + 2 sqrt(lam2 lam4)."""
    if isinstance(rho, SortedSpectrum):
        lam = rho.values
    else:
        if rho.dim != 4:
            raise ValidationError("absolute-separability test is for two qubits")
        lam = SortedSpectrum.of_state(rho).values
    return lam[0] <= lam[2] + 2.0 * math.sqrt(max(lam[1] * lam[3], 0.0)) + 1e-12
