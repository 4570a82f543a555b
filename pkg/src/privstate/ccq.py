"""Purification, ccq-state extraction, the Devetak-Winter rate, and the
twisting-based key witness.

Eve always holds the purifying system of the input state. Measuring the two
designated key subsystems and tracing everything else yields the ccq data:
a joint outcome distribution and one subnormalized Eve operator per outcome.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .measures import shannon_entropy
from .operators import (
    DensityOperator,
    TensorOperator,
    ValidationError,
    partial_trace,
)

PURIFICATION_CUTOFF = 1e-12


@dataclasses.dataclass(frozen=True)
class PureState:
    """A state vector over the listed subsystem dimensions."""

    dims: tuple[int, ...]
    vec: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vec, dtype=np.complex128).ravel()
        total = int(np.prod(self.dims))
        if v.shape[0] != total:
            raise ValidationError("vector length does not match dims")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "vec", v)

    def density(self) -> DensityOperator:
        return DensityOperator(self.dims, np.outer(self.vec, self.vec.conj()))


@dataclasses.dataclass(frozen=True)
class CcqState:
    """Outcome distribution plus subnormalized Eve conditionals, one per key pair."""

    d_a: int
    d_b: int
    probs: np.ndarray  # (d_a, d_b), real
    eve_ops: np.ndarray  # (d_a, d_b, e, e), tr eve_ops[i,j] = probs[i,j]

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        ops = np.asarray(self.eve_ops, dtype=np.complex128)
        if probs.shape != (self.d_a, self.d_b):
            raise ValidationError("probs shape mismatch")
        if ops.shape[:2] != (self.d_a, self.d_b) or ops.shape[2] != ops.shape[3]:
            raise ValidationError("eve_ops shape mismatch")
        if abs(probs.sum() - 1.0) > 1e-10:
            raise ValidationError(f"outcome probabilities sum to {probs.sum()}")
        for i in range(self.d_a):
            for j in range(self.d_b):
                op = ops[i, j]
                if np.max(np.abs(op - op.conj().T)) > 1e-9:
                    raise ValidationError("eve operator not Hermitian")
                tr = np.trace(op).real
                if abs(tr - probs[i, j]) > 1e-10:
                    raise ValidationError("eve operator trace does not match probability")
                if np.linalg.eigvalsh(op)[0] < -1e-9:
                    raise ValidationError("eve operator not PSD")
        probs.flags.writeable = False
        ops.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "eve_ops", ops)

    @property
    def eve_dim(self) -> int:
        return self.eve_ops.shape[2]


def standard_purification(rho: DensityOperator, cutoff: float = PURIFICATION_CUTOFF) -> PureState:
    """sum_i sqrt(p_i) |psi_i> x |i>; eigenvalues below the cutoff are dropped."""
    vals, vecs = np.linalg.eigh(rho.mat)
    keep = vals > cutoff
    vals, vecs = vals[keep], vecs[:, keep]
    r = max(1, vals.shape[0])
    amp = np.zeros((rho.dim, r), dtype=np.complex128)
    for k in range(vals.shape[0]):
        amp[:, k] = np.sqrt(vals[k]) * vecs[:, k]
    return PureState(rho.dims + (r,), amp.reshape(-1))


def ccq_of(rho: DensityOperator, key_subsystems: tuple[int, int] = (0, 1)) -> CcqState:
    """Measure the two key subsystems, trace the rest; Eve keeps the purifier.

    Works unchanged for multipartite states: any subsystem that is not one of
    the two designated keys is treated as shield and traced out, which (for
    classically key-correlated states) equals measuring and marginalizing it.
    """
    a_idx, b_idx = key_subsystems
    n = rho.n_subsystems
    if not (0 <= a_idx < n and 0 <= b_idx < n) or a_idx == b_idx:
        raise ValidationError("key subsystem indices invalid")
    pure = standard_purification(rho)
    r = pure.dims[-1]
    amps = pure.vec.reshape(rho.dims + (r,))
    amps = np.moveaxis(amps, (a_idx, b_idx), (0, 1))
    d_a, d_b = amps.shape[0], amps.shape[1]
    amps = amps.reshape(d_a, d_b, -1, r)
    probs = np.zeros((d_a, d_b))
    eve = np.zeros((d_a, d_b, r, r), dtype=np.complex128)
    for i in range(d_a):
        for j in range(d_b):
            f = amps[i, j]  # shield x eve amplitude block
            op = np.einsum("se,sf->ef", f, f.conj())
            eve[i, j] = op
            probs[i, j] = np.trace(op).real
    return CcqState(d_a, d_b, probs, eve)


def _holevo_information(probs_a: np.ndarray, eve_by_a: np.ndarray) -> float:
    """I(A:E) = S(sum_a rho_a) - sum_a p_a S(rho_a / p_a) with subnormalized rho_a."""

    def ent(op: np.ndarray) -> float:
        lam = np.linalg.eigvalsh(op)
        lam = np.clip(lam, 0.0, None)
        lam = lam[lam > 0]
        return float(-(lam * np.log2(lam)).sum())

    total = eve_by_a.sum(axis=0)
    s_total = ent(total)
    s_cond = 0.0
    for a in range(eve_by_a.shape[0]):
        p = probs_a[a]
        if p > 0:
            s_cond += p * ent(eve_by_a[a] / p)
    return s_total - s_cond


def dw_rate(ccq: CcqState) -> float:
    """One-way Devetak-Winter rate I(A:B) - I(A:E); may be negative."""
    p = ccq.probs
    pa, pb = p.sum(axis=1), p.sum(axis=0)
    i_ab = shannon_entropy(pa) + shannon_entropy(pb) - shannon_entropy(p)
    eve_by_a = ccq.eve_ops.sum(axis=1)
    i_ae = _holevo_information(pa, eve_by_a)
    return i_ab - i_ae


@dataclasses.dataclass(frozen=True)
class ControlledTwisting:
    """Controlled unitary sum_{ij} |ij><ij| x U^(ij) over the two key registers."""

    d_a: int
    d_b: int
    blocks: np.ndarray  # (d_a, d_b, s, s)

    def __post_init__(self) -> None:
        blocks = np.asarray(self.blocks, dtype=np.complex128)
        if blocks.ndim != 4 or blocks.shape[:2] != (self.d_a, self.d_b):
            raise ValidationError("expected one block per key pair (i, j)")
        s = blocks.shape[2]
        if blocks.shape[3] != s:
            raise ValidationError("twisting blocks must be square")
        eye = np.eye(s)
        for i in range(self.d_a):
            for j in range(self.d_b):
                u = blocks[i, j]
                if np.max(np.abs(u.conj().T @ u - eye)) > 1e-9:
                    raise ValidationError(f"block ({i},{j}) is not unitary")
        blocks = blocks.copy()
        blocks.flags.writeable = False
        object.__setattr__(self, "blocks", blocks)

    @property
    def shield_dim(self) -> int:
        return self.blocks.shape[2]

    def full_unitary(self, shield_dims: tuple[int, ...]) -> TensorOperator:
        s = self.shield_dim
        total = self.d_a * self.d_b * s
        m = np.zeros((total, total), dtype=np.complex128)
        for i in range(self.d_a):
            for j in range(self.d_b):
                k = (i * self.d_b + j) * s
                m[k : k + s, k : k + s] = self.blocks[i, j]
        return TensorOperator((self.d_a, self.d_b) + shield_dims, m)

    def dagger(self) -> "ControlledTwisting":
        return ControlledTwisting(self.d_a, self.d_b, np.conj(np.transpose(self.blocks, (0, 1, 3, 2))))


def twisting_of_spec(spec) -> ControlledTwisting:
    """The twisting generating pdit(spec): U^(ij) = U_i (controls on Alice's key)."""
    s = spec.shield_dim
    blocks = np.zeros((spec.d, spec.d, s, s), dtype=np.complex128)
    for i in range(spec.d):
        for j in range(spec.d):
            blocks[i, j] = spec.unitaries[i].mat
    return ControlledTwisting(spec.d, spec.d, blocks)


def apply_twisting(rho: DensityOperator, tw: ControlledTwisting) -> DensityOperator:
    """Conjugate a (A, B, shield...) state by the controlled twisting."""
    if rho.dims[0] != tw.d_a or rho.dims[1] != tw.d_b:
        raise ValidationError("key dimensions do not match the twisting")
    shield = rho.dims[2:]
    if int(np.prod(shield)) != tw.shield_dim:
        raise ValidationError("shield dimension does not match the twisting blocks")
    u = tw.full_unitary(shield).mat
    return DensityOperator(rho.dims, u @ rho.mat @ u.conj().T, rho.tol)


def ku_witness(
    rho: DensityOperator,
    twisting: ControlledTwisting,
    local_us: tuple[TensorOperator, TensorOperator] | None = None,
    alice: tuple[int, ...] | None = None,
) -> float:
    """Devetak-Winter rate of the key part after twisting and shield removal.

    A strictly positive value certifies distillable key in the input. The
    input is (A, B, shield...); ``local_us``, when given, are applied to
    Alice's block (key + her shield factors, listed in ``alice``) and Bob's
    complement before the twisting.
    """
    work = rho
    if local_us is not None:
        u_a, u_b = local_us
        n = rho.n_subsystems
        alice_idx = alice if alice is not None else (0,) + tuple(range(2, 2 + (n - 2) // 2))
        bob_idx = tuple(i for i in range(n) if i not in alice_idx)
        from .operators import kron, permute_subsystems

        side_major = permute_subsystems(rho, list(alice_idx) + list(bob_idx))
        u = kron(u_a, u_b).mat
        conj = u @ side_major.mat @ u.conj().T
        back = [0] * n
        for pos, src in enumerate(list(alice_idx) + list(bob_idx)):
            back[src] = pos
        restored = permute_subsystems(TensorOperator(side_major.dims, conj), back)
        work = DensityOperator(rho.dims, restored.mat, rho.tol)
    twisted = apply_twisting(work, twisting)
    key_only = partial_trace(twisted, range(2, twisted.n_subsystems))
    key_state = DensityOperator(key_only.dims, key_only.mat, rho.tol)
    return dw_rate(ccq_of(key_state, (0, 1)))


def multipartite_rate(ccq_per_pair: list[CcqState]) -> float:
    """min over pairs (A, B_j) of the Devetak-Winter rate."""
    if not ccq_per_pair:
        raise ValidationError("need at least one pair")
    return min(dw_rate(c) for c in ccq_per_pair)


def pair_ccqs(rho: DensityOperator, key_systems: tuple[int, ...]) -> list[CcqState]:
    """ccq states of (first key, j-th key) for each other key, shield traced."""
    if len(key_systems) < 2:
        raise ValidationError("need at least two key systems")
    a = key_systems[0]
    return [ccq_of(rho, (a, b)) for b in key_systems[1:]]
