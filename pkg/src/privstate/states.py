"""Constructors for private states and the fixed example states used throughout.

A private state on key dimension d with shield factors ``shield_dims`` lives on
subsystems ordered (A_key, B_key, shield...); the first ``n_alice_shield``
shield factors belong to Alice, the rest to Bob.
"""
from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence

import numpy as np

from . import sampling
from .operators import (
    DEFAULT_DIM_BUDGET,
    Bipartition,
    DensityOperator,
    TensorOperator,
    ValidationError,
    check_budget,
    identity,
    kron,
    permute_subsystems,
)

_UNITARY_TOL = 1e-9


def _check_unitary(mat: np.ndarray, tol: float = _UNITARY_TOL) -> None:
    d = mat.shape[0]
    dev = float(np.max(np.abs(mat.conj().T @ mat - np.eye(d))))
    if dev > tol:
        raise ValidationError(f"matrix is not unitary within {tol}: deviation {dev}")


@dataclasses.dataclass(frozen=True)
class PrivateStateSpec:
    """Key dimension, shield state, and the d controlled unitaries of a private state."""

    d: int
    shield_dims: tuple[int, ...]
    sigma: DensityOperator
    unitaries: tuple[TensorOperator, ...]
    n_alice_shield: int = -1  # -1 means first half of the shield factors

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValidationError("key dimension must be at least 2")
        shield_dims = tuple(int(x) for x in self.shield_dims)
        object.__setattr__(self, "shield_dims", shield_dims)
        if self.sigma.dims != shield_dims:
            raise ValidationError(
                f"shield state dims {self.sigma.dims} do not match shield_dims {shield_dims}"
            )
        if len(self.unitaries) != self.d:
            raise ValidationError(f"need exactly {self.d} unitaries, got {len(self.unitaries)}")
        us = tuple(self.unitaries)
        for u in us:
            if u.dims != shield_dims:
                raise ValidationError("unitary dims do not match the shield")
            _check_unitary(u.mat)
        object.__setattr__(self, "unitaries", us)
        n_alice = self.n_alice_shield
        if n_alice == -1:
            n_alice = len(shield_dims) // 2
        if not 0 <= n_alice <= len(shield_dims):
            raise ValidationError("n_alice_shield out of range")
        object.__setattr__(self, "n_alice_shield", n_alice)

    @property
    def shield_dim(self) -> int:
        return int(np.prod(self.shield_dims)) if self.shield_dims else 1

    @property
    def total_dim(self) -> int:
        return self.d * self.d * self.shield_dim

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.d, self.d) + self.shield_dims

    def key_cut(self) -> Bipartition:
        """AA' vs BB' bipartition over the (A, B, shield...) subsystem list."""
        alice = (0,) + tuple(2 + i for i in range(self.n_alice_shield))
        bob = (1,) + tuple(2 + i for i in range(self.n_alice_shield, len(self.shield_dims)))
        return Bipartition(alice, bob)


@dataclasses.dataclass(frozen=True)
class MultipartiteSpec:
    """Private state shared by one Alice and ``n_bobs`` Bobs, one key factor each."""

    d: int
    n_bobs: int
    shield_dims: tuple[int, ...]
    sigma: DensityOperator
    unitaries: tuple[TensorOperator, ...]

    def __post_init__(self) -> None:
        if self.d < 2 or self.n_bobs < 1:
            raise ValidationError("need key dimension >= 2 and at least one Bob")
        shield_dims = tuple(int(x) for x in self.shield_dims)
        object.__setattr__(self, "shield_dims", shield_dims)
        if self.sigma.dims != shield_dims:
            raise ValidationError("shield state dims do not match shield_dims")
        if len(self.unitaries) != self.d:
            raise ValidationError(f"need exactly {self.d} unitaries")
        for u in self.unitaries:
            if u.dims != shield_dims:
                raise ValidationError("unitary dims do not match the shield")
            _check_unitary(u.mat)
        object.__setattr__(self, "unitaries", tuple(self.unitaries))

    @property
    def n_parties(self) -> int:
        return self.n_bobs + 1

    @property
    def shield_dim(self) -> int:
        return int(np.prod(self.shield_dims)) if self.shield_dims else 1

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.d,) * self.n_parties + self.shield_dims


def max_entangled(d: int) -> DensityOperator:
    """Projector onto (1/sqrt(d)) sum_i |ii>, on dims (d, d)."""
    v = np.zeros(d * d, dtype=np.complex128)
    for i in range(d):
        v[i * d + i] = 1.0 / math.sqrt(d)
    return DensityOperator((d, d), np.outer(v, v.conj()))


def _key_block_state(d: int, spec_dims: tuple[int, ...], blocks) -> np.ndarray:
    """Assemble sum_{ij} |ii><jj| x blocks[i][j] over key dims (d, d)."""
    s = int(np.prod(spec_dims)) if spec_dims else 1
    total = d * d * s
    m = np.zeros((total, total), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            blk = blocks(i, j)
            if blk is None:
                continue
            r = (i * d + i) * s
            c = (j * d + j) * s
            m[r : r + s, c : c + s] = blk
    return m


def pdit(spec: PrivateStateSpec, budget: int = DEFAULT_DIM_BUDGET) -> DensityOperator:
    """The private state (1/d) sum_{ij} |ii><jj| x U_i sigma U_j^dagger."""
    check_budget(spec.total_dim, budget, "private state")
    sig = spec.sigma.mat
    us = [u.mat for u in spec.unitaries]
    conj = [us[i] @ sig for i in range(spec.d)]

    def blocks(i: int, j: int) -> np.ndarray:
        return (conj[i] @ us[j].conj().T) / spec.d

    m = _key_block_state(spec.d, spec.shield_dims, blocks)
    return DensityOperator(spec.dims, m)


def key_attack(spec: PrivateStateSpec, budget: int = DEFAULT_DIM_BUDGET) -> DensityOperator:
    """The state after Eve measures the key: diagonal key blocks U_i sigma U_i^dagger only."""
    check_budget(spec.total_dim, budget, "key-attacked state")
    sig = spec.sigma.mat
    us = [u.mat for u in spec.unitaries]

    def blocks(i: int, j: int):
        if i != j:
            return None
        return (us[i] @ sig @ us[i].conj().T) / spec.d

    m = _key_block_state(spec.d, spec.shield_dims, blocks)
    return DensityOperator(spec.dims, m)


def twisting(spec: PrivateStateSpec) -> TensorOperator:
    """The controlled unitary sum_{ij} |ij><ij| x U_i on (A, B, shield...).

    Controls on Alice's key index only, so conjugating P+ x sigma by it yields
    pdit(spec) and conjugating pdit(spec) by its dagger recovers P+ x sigma.
    """
    d, s = spec.d, spec.shield_dim
    m = np.zeros((spec.total_dim, spec.total_dim), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            k = (i * d + j) * s
            m[k : k + s, k : k + s] = spec.unitaries[i].mat
    return TensorOperator(spec.dims, m)


def untwisting(spec: PrivateStateSpec) -> TensorOperator:
    return twisting(spec).dagger()


def basic_spec(
    d: int,
    sigma: DensityOperator,
    n_alice_shield: int = -1,
) -> PrivateStateSpec:
    """Spec of the basic private state P+ x sigma (identity twisting)."""
    eye = identity(sigma.dims)
    return PrivateStateSpec(d, sigma.dims, sigma, (eye,) * d, n_alice_shield)


def random_private_spec(
    d: int,
    shield_dims: Sequence[int],
    rng: np.random.Generator,
    n_alice_shield: int = -1,
) -> PrivateStateSpec:
    """Random shield state plus d Haar-random controlled unitaries."""
    shield_dims = tuple(int(x) for x in shield_dims)
    sigma = sampling.random_density(shield_dims, rng)
    us = tuple(
        TensorOperator(shield_dims, sampling.haar_unitary(int(np.prod(shield_dims)), rng))
        for _ in range(d)
    )
    return PrivateStateSpec(d, shield_dims, sigma, us, n_alice_shield)


def flower(d: int) -> PrivateStateSpec:
    """Key-qubit private state whose shield holds a d-level maximally correlated state.

    The nontrivial twist embeds the log2(d)-fold Hadamard on span{|ii>} and acts
    as the identity on its orthocomplement.
    """
    if d < 2 or d & (d - 1):
        raise ValidationError("flower construction needs d a power of 2")
    n = d.bit_length() - 1
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    w = np.array([[1.0]])
    for _ in range(n):
        w = np.kron(w, h)
    shield_dims = (d, d)
    sig = np.zeros((d * d, d * d), dtype=np.complex128)
    basis = [i * d + i for i in range(d)]
    for i in basis:
        sig[i, i] = 1.0 / d
    u1 = np.eye(d * d, dtype=np.complex128)
    for a, ia in enumerate(basis):
        for b, ib in enumerate(basis):
            u1[ia, ib] = w[a, b]
    u0 = identity(shield_dims)
    sigma = DensityOperator(shield_dims, sig)
    return PrivateStateSpec(
        2, shield_dims, sigma, (u0, TensorOperator(shield_dims, u1)), n_alice_shield=1
    )


def omega_example(theta: float) -> tuple[DensityOperator, TensorOperator]:
    """The two-qubit state omega and the rotation V(theta) that keeps it PPT."""
    om = np.zeros((4, 4), dtype=np.complex128)
    for r in (0, 3):
        for c in (0, 3):
            om[r, c] = 0.25
    for r in (1, 2):
        for c in (1, 2):
            om[r, c] = 0.25
    c, s = math.cos(theta), math.sin(theta)
    v = np.array(
        [
            [0.0, 0.0, 1.0, 0.0],
            [s, -c, 0.0, 0.0],
            [c, s, 0.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
        ],
        dtype=np.complex128,
    )
    return DensityOperator((2, 2), om), TensorOperator((2, 2), v)


def omega_tilde() -> DensityOperator:
    """The dephased companion of omega: (|00><00| + |11><11|) / 2."""
    m = np.zeros((4, 4), dtype=np.complex128)
    m[0, 0] = 0.5
    m[3, 3] = 0.5
    return DensityOperator((2, 2), m)


def werner(d: int, kind: str) -> DensityOperator:
    """Normalized projector onto the symmetric or antisymmetric subspace of C^d x C^d."""
    if d < 2:
        raise ValidationError("werner needs d >= 2")
    swap = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            swap[i * d + j, j * d + i] = 1.0
    eye = np.eye(d * d, dtype=np.complex128)
    if kind == "symmetric":
        proj = 0.5 * (eye + swap)
    elif kind == "antisymmetric":
        proj = 0.5 * (eye - swap)
    else:
        raise ValidationError(f"unknown werner kind {kind!r}")
    tr = np.trace(proj).real
    if tr < 0.5:
        raise ValidationError("projector has zero rank for these parameters")
    return DensityOperator((d, d), proj / tr)


def _interleave_to_split(op: TensorOperator, k: int) -> TensorOperator:
    """(a1 b1 a2 b2 ... ak bk) -> (a1..ak b1..bk), regrouped to two factors."""
    perm = list(range(0, 2 * k, 2)) + list(range(1, 2 * k, 2))
    out = permute_subsystems(op, perm)
    da = int(np.prod(out.dims[:k]))
    db = int(np.prod(out.dims[k:]))
    return out.with_dims((da, db))


def _tensor_power(mat: np.ndarray, m: int) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for _ in range(m):
        out = np.kron(out, mat)
    return out


def rec_ppt_key_state(
    p: float,
    dtilde: int,
    k: int,
    m: int,
    budget: int = DEFAULT_DIM_BUDGET,
) -> DensityOperator:
    """Key-qubit block state built from Werner-projector shields.

    Parameters follow the family with tau1 = ((rho_a + rho_s)/2)^(x k),
    tau2 = rho_s^(x k); the four key-diagonal/antidiagonal blocks are
    [p (tau1 + tau2)/2]^(x m), [p (tau1 - tau2)/2]^(x m) and
    [(1/2 - p) tau2]^(x m), jointly normalized.
    """
    if not 0.0 < p <= 0.5:
        raise ValidationError("p must lie in (0, 1/2]")
    if dtilde < 2 or k < 1 or m < 1:
        raise ValidationError("need dtilde >= 2 and k, m >= 1")
    pair = dtilde**k
    total = 4 * pair ** (2 * m)
    check_budget(total, budget, "recurrence key state")

    rho_s = werner(dtilde, "symmetric").as_operator()
    rho_a = werner(dtilde, "antisymmetric").as_operator()
    mix = TensorOperator(rho_s.dims, 0.5 * (rho_a.mat + rho_s.mat))

    def k_fold_split(op: TensorOperator) -> np.ndarray:
        big = TensorOperator((dtilde, dtilde) * k, _tensor_power(op.mat, k))
        return _interleave_to_split(big, k).mat

    tau1 = k_fold_split(mix)
    tau2 = k_fold_split(rho_s)

    block_a = _tensor_power(p * 0.5 * (tau1 + tau2), m)
    block_b = _tensor_power(p * 0.5 * (tau1 - tau2), m)
    block_c = _tensor_power((0.5 - p) * tau2, m)
    norm = 2.0 * np.trace(block_a).real + 2.0 * np.trace(block_c).real

    shield_dims = (pair, pair) * m
    s = pair ** (2 * m)
    mat = np.zeros((total, total), dtype=np.complex128)

    def put(kr: int, kc: int, blk: np.ndarray) -> None:
        mat[kr * s : (kr + 1) * s, kc * s : (kc + 1) * s] = blk / norm

    put(0, 0, block_a)
    put(3, 3, block_a)
    put(0, 3, block_b)
    put(3, 0, block_b)
    put(1, 1, block_c)
    put(2, 2, block_c)

    return DensityOperator((2, 2) + shield_dims, mat)


def rec_ppt_expected_ppt(p: float, dtilde: int, k: int) -> bool:
    """Closed-form PPT predicate for rec_ppt_key_state (independent of m)."""
    if p > 1.0 / 3.0 + 1e-15:
        return False
    return (1.0 - p) / p >= (dtilde / (dtilde - 1.0)) ** k - 1e-12


def rec_ppt_cut(m: int) -> Bipartition:
    """AA' vs BB' cut for rec_ppt_key_state with m shield pairs."""
    alice = (0,) + tuple(2 + 2 * i for i in range(m))
    bob = (1,) + tuple(3 + 2 * i for i in range(m))
    return Bipartition(alice, bob)


def multipartite_pdit(spec: MultipartiteSpec, budget: int = DEFAULT_DIM_BUDGET) -> DensityOperator:
    """(1/d) sum_{ij} |i..i><j..j| x U_i sigma U_j^dagger over n_parties key factors."""
    n = spec.n_parties
    total = spec.d**n * spec.shield_dim
    check_budget(total, budget, "multipartite private state")
    d, s = spec.d, spec.shield_dim
    rep = (d**n - 1) // (d - 1)  # index of |i..i> is i * rep
    sig = spec.sigma.mat
    us = [u.mat for u in spec.unitaries]
    mat = np.zeros((total, total), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            blk = us[i] @ sig @ us[j].conj().T / d
            r = i * rep * s
            c = j * rep * s
            mat[r : r + s, c : c + s] = blk
    return DensityOperator(spec.dims, mat)


def abs_sep_sample(rng_seed: int | np.random.Generator, max_tries: int = 10000) -> DensityOperator:
    """Random two-qubit state that stays separable under every global unitary.

    Rejection-samples a flat-simplex spectrum against the spectral condition
    lam1 <= lam3 + 2 sqrt(lam2 lam4), then applies a Haar unitary.
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    for _ in range(max_tries):
        lam = np.sort(rng.dirichlet(np.ones(4)))[::-1]
        if lam[0] <= lam[2] + 2.0 * math.sqrt(lam[1] * lam[3]):
            u = sampling.haar_unitary(4, rng)
            m = (u * lam) @ u.conj().T
            return DensityOperator((2, 2), m)
    raise RuntimeError("rejection sampling failed to find a spectrum")
