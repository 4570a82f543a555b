"""Type-class combinatorics, the finite-m one-way key-rate bound, and a dense
small-m oracle for the block-structured protocol output state.

The protocol measures m key copies, keeps the strings whose per-symbol
frequencies sit within delta of uniform, runs a key-distillation subprotocol on
the shields selected by each surviving type, and flags everything else as an
error branch. The rate bound and the exact Devetak-Winter value of the idealized
output are both computed here, by independent routes.
"""
from __future__ import annotations

import dataclasses
import itertools
import math
from collections.abc import Sequence
from typing import NamedTuple

import numpy as np

from .ccq import multipartite_rate  # noqa: F401  (rate of the multi-Bob variant lives with ccq)
from .measures import binary_entropy, eta, shannon_entropy, vn_entropy
from .operators import (
    DEFAULT_DIM_BUDGET,
    BudgetExceeded,
    DensityOperator,
    ValidationError,
    check_budget,
    partial_trace,
)

LN2 = math.log(2.0)
DEFAULT_TYPE_BUDGET = 2_000_000


@dataclasses.dataclass(frozen=True)
class TypeHistogram:
    """Symbol counts of length-m strings over a d-letter alphabet."""

    counts: tuple[int, ...]
    multiplicity: int
    prob: float

    @property
    def d(self) -> int:
        return len(self.counts)

    @property
    def m(self) -> int:
        return sum(self.counts)


def _multinomial(counts: Sequence[int]) -> int:
    total = sum(counts)
    out = 1
    rem = total
    for c in counts:
        out *= math.comb(rem, c)
        rem -= c
    return out


def type_enumerate(d: int, m: int, max_types: int = DEFAULT_TYPE_BUDGET) -> list[TypeHistogram]:
    """All symbol-count histograms for strings in {0..d-1}^m."""
    if d < 1 or m < 1:
        raise ValidationError("need d, m >= 1")
    n_types = math.comb(m + d - 1, m)
    if n_types > max_types:
        raise BudgetExceeded(f"{n_types} types exceed the enumeration budget {max_types}")
    total_strings = d**m
    out = []
    # stars and bars: bar positions among m + d - 1 slots
    for bars in itertools.combinations(range(m + d - 1), d - 1):
        counts = []
        prev = -1
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(m + d - 2 - prev)
        mult = _multinomial(counts)
        out.append(TypeHistogram(tuple(counts), mult, mult / total_strings))
    return out


def type_count_bound(d: int, m: int) -> float:
    """2^((m+d-1) h(m/(m+d-1))): the entropic cap on the number of types."""
    return 2.0 ** ((m + d - 1) * binary_entropy(m / (m + d - 1)))


class DeltaInfo(NamedTuple):
    value: float
    clipped: bool


def delta_default(m: int, d: int) -> DeltaInfo:
    """2 log2(m) sqrt(d) / sqrt(m), clipped to 1/d - 1/m so t_min stays >= 1."""
    if m < 2:
        raise ValidationError("need m >= 2")
    raw = 2.0 * math.log2(m) * math.sqrt(d) / math.sqrt(m)
    cap = 1.0 / d - 1.0 / m
    if raw > cap:
        return DeltaInfo(cap, True)
    return DeltaInfo(raw, False)


def pB_bound(m: float, d: int, delta: float) -> float:
    """2^(-m (delta^2/(2 ln 2) - d log2(m+1)/m)), capped at 1."""
    if m <= 0 or d < 1 or delta < 0:
        raise ValidationError("need positive m, d and nonnegative delta")
    exponent = m * delta * delta / (2.0 * LN2) - d * math.log2(m + 1.0)
    if exponent <= 0:
        return 1.0
    if exponent > 1074:  # below smallest subnormal double
        return 0.0
    return 2.0**-exponent


def good_set(
    types: Sequence[TypeHistogram], d: int, m: int, delta: float
) -> tuple[list[TypeHistogram], list[TypeHistogram]]:
    """Split into (good, bad): good iff every symbol frequency is delta-close to 1/d."""
    good, bad = [], []
    for t in types:
        if all(abs(c / m - 1.0 / d) <= delta + 1e-15 for c in t.counts):
            good.append(t)
        else:
            bad.append(t)
    return good, bad


def t_min_of(m: float, d: int, delta: float) -> int:
    """floor(m (1/d - delta)), never negative."""
    return max(0, math.floor(m * (1.0 / d - delta) + 1e-12))


@dataclasses.dataclass(frozen=True)
class ProtocolParams:
    """Inputs of the finite-m rate bound.

    delta defaults to delta_default(m, d); delta_prime (the subprotocol rate
    slack) defaults to delta; log_dt defaults to t_min (kd_sigma - delta_prime)
    clamped at 0; p_bound overrides the computed atypicality bound (used by
    exact-table callers where the true error weight is known).
    """

    d: int
    m: int
    kd_sigma: float
    eps: float
    delta: float | None = None
    delta_prime: float | None = None
    log_dt: float | None = None
    p_bound: float | None = None
    delta_clipped: bool = False

    def __post_init__(self) -> None:
        if self.d < 2 or self.m < 2:
            raise ValidationError("need d >= 2 and m >= 2")
        if not 0.0 <= self.eps <= 1.0:
            raise ValidationError("eps must lie in [0, 1]")
        if self.delta is None:
            info = delta_default(self.m, self.d)
            object.__setattr__(self, "delta", info.value)
            object.__setattr__(self, "delta_clipped", info.clipped)
        if self.delta_prime is None:
            object.__setattr__(self, "delta_prime", self.delta)
        if self.log_dt is None:
            object.__setattr__(
                self,
                "log_dt",
                max(self.t_min * (self.kd_sigma - self.delta_prime), 0.0),
            )
        if self.log_dt < self.t_min * (self.kd_sigma - self.delta_prime) - 1e-9:
            raise ValidationError("log_dt below the subprotocol output size")

    @property
    def t_min(self) -> int:
        return t_min_of(self.m, self.d, self.delta)

    @property
    def p_b(self) -> float:
        if self.p_bound is not None:
            return self.p_bound
        return pB_bound(self.m, self.d, self.delta)


@dataclasses.dataclass(frozen=True)
class RateReport:
    p_B_bound: float
    type_entropy_term: float
    g1: float
    g2: float
    f: float
    lower_bound_bits: float
    per_copy_rate: float
    t_min: int
    delta: float
    delta_clipped: bool
    asymptote: float

    @property
    def below_asymptote(self) -> bool:
        return self.per_copy_rate <= self.asymptote + 1e-12


def rate_asymptote(d: int, kd_sigma: float) -> float:
    """log2 d + kd_sigma/d: the infinite-m limit of the protocol rate."""
    if kd_sigma < 0:
        raise ValidationError("kd_sigma must be nonnegative")
    return math.log2(d) + kd_sigma / d


def lemma1_lower_bound(params: ProtocolParams) -> RateReport:
    """Finite-m lower bound on the one-way rate of the measured block state.

    Binary-entropy arguments are clamped into [0, 1]; whenever the clamp is
    active (p_B > 1/2) the bound is deep in its vacuous regime anyway.
    """
    d, m = params.d, params.m
    p_b = params.p_b
    eps = params.eps
    log_d = math.log2(d)
    log_d_total = m * log_d + params.log_dt
    h_2pb = binary_entropy(min(2.0 * p_b, 1.0))
    h_eps = binary_entropy(min(eps, 1.0))
    g1 = 2.0 * p_b * m * log_d + h_2pb + 5.0 * eps * log_d_total + 3.0 * h_eps
    g2 = eps * params.log_dt + eta(eps) + 4.0 * eps * log_d_total + 2.0 * h_eps
    f = g1 + g2
    type_term = (m + d - 1) * binary_entropy(m / (m + d - 1))
    bits = (
        m * log_d
        + (1.0 - p_b) * params.t_min * (params.kd_sigma - params.delta_prime)
        - type_term
        - f
    )
    return RateReport(
        p_B_bound=p_b,
        type_entropy_term=type_term,
        g1=g1,
        g2=g2,
        f=f,
        lower_bound_bits=bits,
        per_copy_rate=bits / m,
        t_min=params.t_min,
        delta=params.delta,
        delta_clipped=params.delta_clipped,
        asymptote=rate_asymptote(d, params.kd_sigma),
    )


def sort_permutation(key_string: Sequence[int]) -> tuple[int, ...]:
    """Stable permutation that sorts the per-copy shield factors by key symbol."""
    return tuple(sorted(range(len(key_string)), key=lambda i: (key_string[i], i)))


# ---------------------------------------------------------------------------
# Block-structured protocol output state and its exact Devetak-Winter value.


@dataclasses.dataclass(frozen=True)
class KeyBlock:
    """A set of key strings sharing one classical flag, with its total weight."""

    strings: tuple[tuple[int, ...], ...]
    weight: float


@dataclasses.dataclass(frozen=True)
class BlockStateDescriptor:
    """Idealized protocol output: per-block maximally correlated keys of size d_t,
    a decoupled Eve conditional state, orthogonal block flags, and an error branch.
    """

    d: int
    m: int
    blocks: tuple[KeyBlock, ...]
    error_weight: float
    d_t: int
    eve_state: DensityOperator
    log_dt_requested: float | None = None

    def __post_init__(self) -> None:
        if self.d_t < 1:
            raise ValidationError("d_t must be at least 1")
        seen: set[tuple[int, ...]] = set()
        total = self.error_weight
        for b in self.blocks:
            if b.weight < -1e-12:
                raise ValidationError("negative block weight")
            for s in b.strings:
                if len(s) != self.m or any(not 0 <= x < self.d for x in s):
                    raise ValidationError(f"bad string {s}")
                if s in seen:
                    raise ValidationError(f"string {s} appears in two blocks")
                seen.add(s)
            total += b.weight
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"weights sum to {total}")

    @property
    def quantization_gap(self) -> float:
        if self.log_dt_requested is None:
            return 0.0
        return math.log2(self.d_t) - self.log_dt_requested


def _sigma_tilde_spectrum(shield_states: Sequence[DensityOperator]) -> np.ndarray:
    spec = np.array([1.0])
    for s in shield_states:
        lam = np.clip(np.linalg.eigvalsh(s.mat), 0.0, None)
        spec = np.outer(spec, lam).ravel()
    return np.sort(spec)[::-1]


def build_rho_m_prime(
    d: int,
    m: int,
    shield_states: Sequence[DensityOperator],
    sub: tuple[float, int],
    delta: float | None = None,
    string_budget: int = 1 << 16,
) -> BlockStateDescriptor:
    """Descriptor of the idealized post-protocol state.

    ``sub = (log_dt, eve_dim)``: the subprotocol output key size (quantized to
    the nearest integer dimension, gap recorded) and the dimension housing
    Eve's conditional state, whose spectrum is that of the tensor product of
    the d shield states (one consumed block of the subprotocol).
    """
    if len(shield_states) != d:
        raise ValidationError(f"need exactly {d} shield states")
    if d**m > string_budget:
        raise BudgetExceeded(f"{d}^{m} strings exceed the budget {string_budget}")
    log_dt, eve_dim = sub
    d_t = max(1, round(2.0**log_dt))
    spectrum = _sigma_tilde_spectrum(shield_states)
    rank = int((spectrum > 1e-12).sum())
    if eve_dim < rank:
        raise ValidationError(f"eve_dim {eve_dim} below shield-product rank {rank}")
    eve = np.zeros((eve_dim, eve_dim), dtype=np.complex128)
    for i in range(min(eve_dim, spectrum.shape[0])):
        eve[i, i] = spectrum[i]
    eve_state = DensityOperator((eve_dim,), eve)

    if delta is None:
        delta = delta_default(m, d).value
    types = type_enumerate(d, m)
    good, bad = good_set(types, d, m, delta)
    by_counts: dict[tuple[int, ...], list[tuple[int, ...]]] = {t.counts: [] for t in good}
    for s in itertools.product(range(d), repeat=m):
        counts = [0] * d
        for x in s:
            counts[x] += 1
        key = tuple(counts)
        if key in by_counts:
            by_counts[key].append(s)
    blocks = []
    for t in good:
        strings = tuple(by_counts[t.counts])
        if len(strings) != t.multiplicity:
            raise ValidationError("string enumeration disagrees with multinomial count")
        blocks.append(KeyBlock(strings, t.prob))
    error_weight = float(sum(t.multiplicity for t in bad)) / d**m
    return BlockStateDescriptor(d, m, tuple(blocks), error_weight, d_t, eve_state, log_dt)


def single_block_descriptor(
    d: int, m: int, d_t: int, eve_state: DensityOperator
) -> BlockStateDescriptor:
    """Degenerate descriptor: every string in one block, no error branch."""
    strings = tuple(itertools.product(range(d), repeat=m))
    return BlockStateDescriptor(d, m, (KeyBlock(strings, 1.0),), 0.0, d_t, eve_state)


@dataclasses.dataclass(frozen=True)
class CdwReport:
    value_formula: float
    value_dense: float | None
    components_formula: dict
    components_dense: dict | None
    quantization_gap: float

    @property
    def discrepancy(self) -> float | None:
        if self.value_dense is None:
            return None
        return abs(self.value_formula - self.value_dense)


def _cdw_formula(desc: BlockStateDescriptor) -> dict:
    weights = [b.weight for b in desc.blocks]
    flags = weights + ([desc.error_weight] if desc.error_weight > 0 else [])
    h_flags = shannon_entropy(flags)
    live = 1.0 - desc.error_weight
    log_dt = math.log2(desc.d_t)
    s_eve = vn_entropy(desc.eve_state)
    mix_entropy = h_flags + sum(
        w * math.log2(len(b.strings)) for w, b in zip(weights, desc.blocks) if w > 0
    )
    s_aa = live * log_dt + mix_entropy
    s_bb = s_aa
    s_aabb = s_aa  # AA' and BB' are classically maximally correlated
    s_e = live * s_eve + h_flags
    s_aae = h_flags + live * (log_dt + s_eve) + (mix_entropy - h_flags)
    i_key = s_aa + s_bb - s_aabb
    i_eve = s_aa + s_e - s_aae
    return {
        "S_AA": s_aa,
        "S_BB": s_bb,
        "S_AABB": s_aabb,
        "S_E": s_e,
        "S_AAE": s_aae,
        "I_key": i_key,
        "I_eve": i_eve,
        "H_flags": h_flags,
        "value": i_key - i_eve,
    }


def _string_index(s: tuple[int, ...], d: int) -> int:
    idx = 0
    for x in s:
        idx = idx * d + x
    return idx


def assemble_key_marginal(
    desc: BlockStateDescriptor, budget: int = DEFAULT_DIM_BUDGET
) -> DensityOperator:
    """Dense AA'BB' marginal on dims (d^m+1, d_t+1, d^m+1, d_t+1); error level last."""
    da = desc.d**desc.m + 1
    dt1 = desc.d_t + 1
    total = (da * dt1) ** 2
    check_budget(total, budget, "key-side marginal")
    mat = np.zeros((total, total), dtype=np.complex128)

    def diag_idx(a: int, k: int, b: int, kk: int) -> int:
        return ((a * dt1 + k) * da + b) * dt1 + kk

    for blk in desc.blocks:
        if blk.weight <= 0:
            continue
        w = blk.weight / (len(blk.strings) * desc.d_t)
        for s in blk.strings:
            a = _string_index(s, desc.d)
            for k in range(desc.d_t):
                i = diag_idx(a, k, a, k)
                mat[i, i] += w
    if desc.error_weight > 0:
        i = diag_idx(da - 1, dt1 - 1, da - 1, dt1 - 1)
        mat[i, i] += desc.error_weight
    return DensityOperator((da, dt1, da, dt1), mat)


def assemble_eve_marginal(
    desc: BlockStateDescriptor, budget: int = DEFAULT_DIM_BUDGET
) -> DensityOperator:
    """Dense AA'E'Etilde marginal; Eve flag register has one level per block plus error."""
    da = desc.d**desc.m + 1
    dt1 = desc.d_t + 1
    de = desc.eve_state.dim + 1
    df = len(desc.blocks) + 1
    total = da * dt1 * de * df
    check_budget(total, budget, "eve-side marginal")
    mat = np.zeros((total, total), dtype=np.complex128)
    eve = desc.eve_state.mat

    def pos(a: int, k: int, e: int, fl: int) -> int:
        return ((a * dt1 + k) * de + e) * df + fl

    for f_idx, blk in enumerate(desc.blocks):
        if blk.weight <= 0:
            continue
        w = blk.weight / (len(blk.strings) * desc.d_t)
        for s in blk.strings:
            a = _string_index(s, desc.d)
            for k in range(desc.d_t):
                for e1 in range(eve.shape[0]):
                    for e2 in range(eve.shape[0]):
                        if eve[e1, e2] != 0:
                            mat[pos(a, k, e1, f_idx), pos(a, k, e2, f_idx)] += w * eve[e1, e2]
    if desc.error_weight > 0:
        i = pos(da - 1, dt1 - 1, de - 1, df - 1)
        mat[i, i] += desc.error_weight
    return DensityOperator((da, dt1, de, df), mat)


def assemble_full(desc: BlockStateDescriptor, budget: int = DEFAULT_DIM_BUDGET) -> DensityOperator:
    """Fully dense AA'BB'E'Etilde state; only feasible for tiny descriptors."""
    da = desc.d**desc.m + 1
    dt1 = desc.d_t + 1
    de = desc.eve_state.dim + 1
    df = len(desc.blocks) + 1
    total = da * dt1 * da * dt1 * de * df
    check_budget(total, budget, "full protocol state")
    mat = np.zeros((total, total), dtype=np.complex128)
    eve = desc.eve_state.mat

    def pos(a: int, k: int, b: int, kk: int, e: int, fl: int) -> int:
        return ((((a * dt1 + k) * da + b) * dt1 + kk) * de + e) * df + fl

    for f_idx, blk in enumerate(desc.blocks):
        if blk.weight <= 0:
            continue
        w = blk.weight / (len(blk.strings) * desc.d_t)
        for s in blk.strings:
            a = _string_index(s, desc.d)
            for k in range(desc.d_t):
                for e1 in range(eve.shape[0]):
                    for e2 in range(eve.shape[0]):
                        if eve[e1, e2] != 0:
                            mat[pos(a, k, a, k, e1, f_idx), pos(a, k, a, k, e2, f_idx)] += (
                                w * eve[e1, e2]
                            )
    if desc.error_weight > 0:
        i = pos(da - 1, dt1 - 1, da - 1, dt1 - 1, de - 1, df - 1)
        mat[i, i] += desc.error_weight
    return DensityOperator((da, dt1, da, dt1, de, df), mat)


def _cdw_dense(desc: BlockStateDescriptor, budget: int) -> dict:
    key_marg = assemble_key_marginal(desc, budget)
    eve_marg = assemble_eve_marginal(desc, budget)

    def ent(op) -> float:
        return vn_entropy(DensityOperator(op.dims, op.mat))

    s_aa = ent(partial_trace(key_marg, (2, 3)))
    s_bb = ent(partial_trace(key_marg, (0, 1)))
    s_aabb = vn_entropy(key_marg)
    s_e = ent(partial_trace(eve_marg, (0, 1)))
    s_aae = vn_entropy(eve_marg)
    i_key = s_aa + s_bb - s_aabb
    i_eve = s_aa + s_e - s_aae
    return {
        "S_AA": s_aa,
        "S_BB": s_bb,
        "S_AABB": s_aabb,
        "S_E": s_e,
        "S_AAE": s_aae,
        "I_key": i_key,
        "I_eve": i_eve,
        "value": i_key - i_eve,
    }


def cdw_exact(
    desc: BlockStateDescriptor,
    budget: int = DEFAULT_DIM_BUDGET,
    dense: bool = True,
) -> CdwReport:
    """I(AA':BB') - I(AA':E) of the descriptor, by closed form and by dense assembly."""
    formula = _cdw_formula(desc)
    dense_components = None
    if dense:
        dense_components = _cdw_dense(desc, budget)
    return CdwReport(
        value_formula=formula["value"],
        value_dense=None if dense_components is None else dense_components["value"],
        components_formula=formula,
        components_dense=dense_components,
        quantization_gap=desc.quantization_gap,
    )
