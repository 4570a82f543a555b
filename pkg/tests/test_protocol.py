import itertools
import math

import numpy as np
import pytest

from privstate.measures import binary_entropy, shannon_entropy, vn_entropy
from privstate.operators import (
    BudgetExceeded,
    DensityOperator,
    TensorOperator,
    ValidationError,
    permute_subsystems,
)
from privstate.protocol import (
    BlockStateDescriptor,
    KeyBlock,
    ProtocolParams,
    build_rho_m_prime,
    cdw_exact,
    delta_default,
    good_set,
    lemma1_lower_bound,
    pB_bound,
    rate_asymptote,
    single_block_descriptor,
    sort_permutation,
    t_min_of,
    type_count_bound,
    type_enumerate,
)
from privstate.sampling import random_density


def qubit(p: float) -> DensityOperator:
    return DensityOperator((2,), np.diag([p, 1.0 - p]).astype(complex))


def test_type_enumerate_binary():
    types = type_enumerate(2, 3)
    by_counts = {t.counts: t for t in types}
    assert set(by_counts) == {(0, 3), (1, 2), (2, 1), (3, 0)}
    assert by_counts[(1, 2)].multiplicity == 3
    assert by_counts[(0, 3)].multiplicity == 1
    assert abs(sum(t.prob for t in types) - 1.0) < 1e-12


def test_type_enumerate_counts_and_bound():
    for d, m in [(2, 12), (3, 7), (4, 5), (2, 50), (3, 40)]:
        types = type_enumerate(d, m)
        assert len(types) == math.comb(m + d - 1, m)
        assert len(types) <= type_count_bound(d, m) + 1e-6
        assert sum(t.multiplicity for t in types) == d**m
        assert all(t.m == m and t.d == d for t in types)


def test_type_enumerate_budget():
    with pytest.raises(BudgetExceeded):
        type_enumerate(1000, 1000, max_types=10)


def test_delta_default_values():
    info = delta_default(10**8, 2)
    assert not info.clipped
    assert abs(info.value - 0.007516665224028681) < 1e-12
    clipped = delta_default(16, 2)
    assert clipped.clipped
    assert abs(clipped.value - (0.5 - 1.0 / 16.0)) < 1e-15
    # shrinks like log(m)/sqrt(m) once past the clipping region
    grid = [2**k for k in range(11, 28, 2)]
    vals = [delta_default(m, 2).value for m in grid]
    assert all(b < a for a, b in zip(vals[2:], vals[3:]))


def test_pb_bound_values():
    assert pB_bound(4, 2, 0.01) == 1.0  # vacuous regime stays capped at one
    tiny = pB_bound(10**8, 2, 0.007516665224028681)
    assert 0.0 <= tiny < 1e-300
    assert pB_bound(10**12, 2, 0.4) == 0.0  # exponent beyond subnormal range


def test_pb_bound_dominates_exact_atypicality():
    # whenever the bound is nonvacuous it upper-bounds the true bad-type weight
    for m in range(2, 21):
        types = type_enumerate(2, m)
        for delta in (0.05, 0.1, 0.2, 0.3, 0.45):
            _, bad = good_set(types, 2, m, delta)
            true_weight = sum(t.prob for t in bad)
            assert true_weight <= pB_bound(m, 2, delta) + 1e-12


def test_good_set_and_t_min():
    types = type_enumerate(2, 4)
    good, bad = good_set(types, 2, 4, 0.25)
    assert {t.counts for t in good} == {(1, 3), (2, 2), (3, 1)}
    assert {t.counts for t in bad} == {(0, 4), (4, 0)}
    assert t_min_of(4, 2, 0.25) == 1
    assert t_min_of(4, 2, 0.5) == 0
    assert t_min_of(4, 2, 0.6) == 0  # never negative
    assert t_min_of(9, 3, 1.0 / 9.0) == 2


def test_protocol_params_defaults_and_validation():
    p = ProtocolParams(d=2, m=1024, kd_sigma=1.0, eps=1e-6)
    info = delta_default(1024, 2)
    assert p.delta == info.value
    assert p.delta_clipped == info.clipped
    assert p.delta_prime == p.delta
    assert p.log_dt == max(p.t_min * (1.0 - p.delta), 0.0)
    with pytest.raises(ValidationError):
        ProtocolParams(d=1, m=16, kd_sigma=1.0, eps=0.0)
    with pytest.raises(ValidationError):
        ProtocolParams(d=2, m=16, kd_sigma=1.0, eps=1.5)
    with pytest.raises(ValidationError):  # log_dt below t_min (kd - delta')
        ProtocolParams(d=2, m=2**12, kd_sigma=2.0, eps=0.0, log_dt=0.1)


def test_lemma1_clean_specialization():
    # eps = 0, forced p_bound = 0, delta = 0: bits = m log d + m kd/d - type term
    d, m, kd = 2, 8, 1.0
    p = ProtocolParams(d=d, m=m, kd_sigma=kd, eps=0.0, delta=0.0, p_bound=0.0)
    rep = lemma1_lower_bound(p)
    assert rep.t_min == m // d
    type_term = (m + d - 1) * binary_entropy(m / (m + d - 1))
    want = m * math.log2(d) + (m // d) * kd - type_term
    assert abs(rep.lower_bound_bits - want) < 1e-12
    assert rep.g1 == 0.0 and rep.g2 == 0.0 and rep.f == 0.0


def test_lemma1_frozen_large_m_value():
    p = ProtocolParams(d=2, m=10**8, kd_sigma=2.0, eps=1e-9)
    rep = lemma1_lower_bound(p)
    # eps=0 gives 1.981264547498776; the 1e-9 smoothing costs f/m ~ 1.9e-8
    assert abs(rep.per_copy_rate - 1.981264528686126) < 1e-12
    assert abs(rep.delta - 0.007516665224028681) < 1e-15
    assert not rep.delta_clipped
    assert rep.below_asymptote


def test_rate_asymptote():
    assert abs(rate_asymptote(2, 2.0) - 2.0) < 1e-15
    assert abs(rate_asymptote(4, 1.0) - 2.25) < 1e-15
    with pytest.raises(ValidationError):
        rate_asymptote(2, -0.5)


def test_rate_monotone_and_approaches_asymptote():
    kd = 2.0
    rates = []
    for k in range(11, 28, 2):
        rep = lemma1_lower_bound(ProtocolParams(d=2, m=2**k, kd_sigma=kd, eps=1e-9))
        assert rep.per_copy_rate <= rep.asymptote + 1e-12
        rates.append(rep.per_copy_rate)
    assert all(b > a for a, b in zip(rates, rates[1:]))
    big = lemma1_lower_bound(ProtocolParams(d=2, m=10**8, kd_sigma=kd, eps=1e-9))
    assert abs(big.per_copy_rate - big.asymptote) < 0.05


def test_sort_permutation():
    assert sort_permutation((0, 1)) == (0, 1)
    assert sort_permutation((1, 0)) == (1, 0)
    assert sort_permutation((1, 0, 0, 1)) == (1, 2, 0, 3)
    assert sort_permutation((2, 1, 0)) == (2, 1, 0)
    # stability: equal symbols keep their original order
    assert sort_permutation((1, 1, 0, 0)) == (2, 3, 0, 1)


def test_sort_permutation_moves_shields():
    # permuting shield factors by the sort order groups same-symbol shields
    rng = np.random.default_rng(0)
    mats = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)]
    key = (1, 0, 1, 0)
    perm = sort_permutation(key)
    big = np.array([[1.0 + 0.0j]])
    for m in mats:
        big = np.kron(big, m)
    op = TensorOperator((2, 2, 2, 2), big)
    out = permute_subsystems(op, perm)
    want = np.array([[1.0 + 0.0j]])
    for i in perm:
        want = np.kron(want, mats[i])
    assert np.max(np.abs(out.mat - want)) < 1e-12


def test_build_rho_m_prime_all_good():
    desc = build_rho_m_prime(2, 2, [qubit(0.5), qubit(0.5)], sub=(1.0, 4), delta=0.5)
    assert desc.error_weight == 0.0
    assert desc.d_t == 2
    assert abs(sum(b.weight for b in desc.blocks) - 1.0) < 1e-12
    assert sum(len(b.strings) for b in desc.blocks) == 4
    # eve spectrum is the product of the two shield spectra
    lam = np.sort(np.linalg.eigvalsh(desc.eve_state.mat))[::-1]
    assert np.max(np.abs(lam - np.array([0.25, 0.25, 0.25, 0.25]))) < 1e-12


def test_build_rho_m_prime_error_weight():
    # m=4, tight delta: only the balanced type (2,2) survives
    desc = build_rho_m_prime(2, 4, [qubit(0.3), qubit(0.8)], sub=(0.0, 4), delta=0.01)
    assert len(desc.blocks) == 1
    assert len(desc.blocks[0].strings) == 6
    assert abs(desc.error_weight - (1.0 - 6.0 / 16.0)) < 1e-12
    assert desc.d_t == 1


def test_build_rho_m_prime_validation():
    with pytest.raises(ValidationError):
        build_rho_m_prime(2, 2, [qubit(0.5)], sub=(1.0, 4))
    with pytest.raises(ValidationError):
        build_rho_m_prime(2, 2, [qubit(0.3), qubit(0.4)], sub=(1.0, 2))  # rank 4 > eve_dim
    with pytest.raises(BudgetExceeded):
        build_rho_m_prime(2, 20, [qubit(0.5), qubit(0.5)], sub=(1.0, 4), string_budget=100)


def test_dt_quantization_gap():
    desc = build_rho_m_prime(2, 2, [qubit(0.5), qubit(0.5)], sub=(1.3, 4), delta=0.5)
    assert desc.d_t == 2
    assert abs(desc.quantization_gap - (1.0 - 1.3)) < 1e-12
    exact = build_rho_m_prime(2, 2, [qubit(0.5), qubit(0.5)], sub=(2.0, 4), delta=0.5)
    assert exact.d_t == 4
    assert exact.quantization_gap == 0.0


def test_descriptor_validation():
    eve = DensityOperator((2,), np.diag([1.0, 0.0]).astype(complex))
    with pytest.raises(ValidationError):  # duplicated string across blocks
        BlockStateDescriptor(
            2, 1, (KeyBlock(((0,),), 0.5), KeyBlock(((0,),), 0.5)), 0.0, 1, eve
        )
    with pytest.raises(ValidationError):  # weights do not sum to one
        BlockStateDescriptor(2, 1, (KeyBlock(((0,),), 0.5),), 0.0, 1, eve)
    with pytest.raises(ValidationError):  # string outside the alphabet
        BlockStateDescriptor(2, 1, (KeyBlock(((3,),), 1.0),), 0.0, 1, eve)


def test_single_block_descriptor_rate():
    eve = DensityOperator((2,), np.diag([0.7, 0.3]).astype(complex))
    desc = single_block_descriptor(2, 3, 4, eve)
    rep = cdw_exact(desc, dense=False)
    assert abs(rep.value_formula - (3.0 + 2.0)) < 1e-12
    assert rep.value_dense is None


def test_cdw_formula_components():
    desc = build_rho_m_prime(2, 4, [qubit(0.3), qubit(0.8)], sub=(1.0, 4), delta=0.01)
    comp = cdw_exact(desc, dense=False).components_formula
    live = 1.0 - desc.error_weight
    flags = [b.weight for b in desc.blocks] + [desc.error_weight]
    h_flags = shannon_entropy(flags)
    assert abs(comp["H_flags"] - h_flags) < 1e-12
    assert abs(comp["I_eve"] - h_flags) < 1e-12  # eve learns exactly the flag
    want = live * math.log2(desc.d_t) + sum(
        b.weight * math.log2(len(b.strings)) for b in desc.blocks
    )
    assert abs(comp["value"] - want) < 1e-12
    assert abs(comp["S_E"] - (live * vn_entropy(desc.eve_state) + h_flags)) < 1e-12


def test_cdw_dense_matches_formula_small():
    rng = np.random.default_rng(1)
    for m in (2, 3):
        shields = [random_density((2,), rng) for _ in range(2)]
        desc = build_rho_m_prime(2, m, shields, sub=(rng.integers(0, 3), 4), delta=0.2)
        rep = cdw_exact(desc, budget=4096)
        assert rep.discrepancy is not None
        assert rep.discrepancy < 1e-9


def test_cdw_dense_matches_formula_m4():
    rng = np.random.default_rng(2)
    shields = [random_density((2,), rng) for _ in range(2)]
    desc = build_rho_m_prime(2, 4, shields, sub=(1.0, 4), delta=0.1)
    rep = cdw_exact(desc, budget=4096)
    assert rep.discrepancy < 1e-9


def test_cdw_full_joint_cross_check():
    # entropies taken from the one fully assembled state, smallest instance
    from privstate.operators import partial_trace
    from privstate.protocol import assemble_full

    rng = np.random.default_rng(3)
    shields = [random_density((2,), rng) for _ in range(2)]
    desc = build_rho_m_prime(2, 2, shields, sub=(1.0, 4), delta=0.1)
    full = assemble_full(desc, budget=4096)

    def ent(keep_away):
        op = partial_trace(full, keep_away)
        return vn_entropy(DensityOperator(op.dims, op.mat))

    s_aa = ent((2, 3, 4, 5))
    s_bb = ent((0, 1, 4, 5))
    s_aabb = ent((4, 5))
    s_e = ent((0, 1, 2, 3))
    s_aae = ent((2, 3))
    value = (s_aa + s_bb - s_aabb) - (s_aa + s_e - s_aae)
    assert abs(value - cdw_exact(desc, dense=False).value_formula) < 1e-9


def test_cdw_budget_guard():
    eve = DensityOperator((2,), np.diag([1.0, 0.0]).astype(complex))
    desc = single_block_descriptor(2, 4, 2, eve)
    with pytest.raises(BudgetExceeded):
        cdw_exact(desc, budget=64)


def test_eve_information_capped_by_type_entropy():
    # Holevo term of the block state never exceeds the type-counting entropy
    rng = np.random.default_rng(4)
    for m in (3, 4, 5):
        shields = [random_density((2,), rng) for _ in range(2)]
        desc = build_rho_m_prime(2, m, shields, sub=(1.0, 4), delta=0.15)
        comp = cdw_exact(desc, dense=False).components_formula
        type_term = (m + 2 - 1) * binary_entropy(m / (m + 1))
        assert comp["I_eve"] <= type_term + 1e-12
        assert abs(comp["I_eve"] - comp["H_flags"]) < 1e-12


def test_lemma1_is_a_lower_bound_on_cdw():
    # the finite-m bound never exceeds the exact Devetak-Winter value of the
    # matching idealized block state (same error weight, same key size)
    rng = np.random.default_rng(5)
    for trial in range(12):
        m = int(rng.integers(2, 7))
        delta = float(rng.uniform(0.02, 0.45))
        log_dt = float(rng.integers(0, 3))
        shields = [random_density((2,), rng) for _ in range(2)]
        desc = build_rho_m_prime(2, m, shields, sub=(log_dt, 4), delta=delta)
        exact = cdw_exact(desc, dense=False).value_formula
        # zero subprotocol payoff (kd = delta') keeps the bound comparable with
        # the descriptor, whose key handout is log2(d_t) per surviving string
        params = ProtocolParams(
            d=2,
            m=m,
            kd_sigma=0.0,
            eps=0.0,
            delta=delta,
            delta_prime=0.0,
            log_dt=math.log2(desc.d_t),
            p_bound=desc.error_weight,
        )
        rep = lemma1_lower_bound(params)
        assert rep.lower_bound_bits <= exact + 1e-9


def test_lemma1_equality_in_degenerate_case():
    # all-good split, d_t = 1: bound = cdw - (type term - flag entropy)
    desc = build_rho_m_prime(2, 4, [qubit(0.5), qubit(0.5)], sub=(0.0, 4), delta=0.5)
    assert desc.error_weight == 0.0
    exact = cdw_exact(desc, dense=False)
    params = ProtocolParams(
        d=2, m=4, kd_sigma=0.0, eps=0.0, delta=0.5, delta_prime=0.0, log_dt=0.0, p_bound=0.0
    )
    rep = lemma1_lower_bound(params)
    h_flags = exact.components_formula["H_flags"]
    want = exact.value_formula - (rep.type_entropy_term - h_flags)
    assert abs(rep.lower_bound_bits - want) < 1e-9
