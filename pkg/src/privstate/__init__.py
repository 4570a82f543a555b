"""Numerics for private-state key distillation: dense operator algebra,
entanglement and key measures, ccq reductions, a Frank-Wolfe relative-entropy
estimator, finite-block rate bounds, and closed-form undistillability bounds.
"""

from .bounds import (
    BoundCurve,
    approx_irreducible_sandwich,
    curve,
    locc_z_bound,
    sec6_epsilon,
    sec6_f,
    sep_distance_bound,
    sep_distance_report,
    z_of_d,
)
from .ccq import (
    CcqState,
    ControlledTwisting,
    apply_twisting,
    ccq_of,
    dw_rate,
    ku_witness,
    multipartite_rate,
    pair_ccqs,
    standard_purification,
    twisting_of_spec,
)
from .measures import (
    binary_entropy,
    conditional_entropy,
    eta,
    is_abs_separable_2q,
    is_ppt,
    log_negativity,
    mutual_information,
    negativity,
    pbit_log_negativity,
    relative_entropy,
    shannon_entropy,
    trace_distance,
    vn_entropy,
)
from .operators import (
    DEFAULT_DIM_BUDGET,
    Bipartition,
    BudgetExceeded,
    DensityOperator,
    TensorOperator,
    ValidationError,
    herm_eig,
    identity,
    kron,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    tensor,
    trace_norm,
)
from .protocol import (
    BlockStateDescriptor,
    ProtocolParams,
    RateReport,
    TypeHistogram,
    build_rho_m_prime,
    cdw_exact,
    delta_default,
    good_set,
    lemma1_lower_bound,
    pB_bound,
    rate_asymptote,
    single_block_descriptor,
    sort_permutation,
    type_count_bound,
    type_enumerate,
)
from .relent import FwParams, Thm2Report, er_trivial_upper, er_upper_fw, thm2_bound
from .states import (
    MultipartiteSpec,
    PrivateStateSpec,
    abs_sep_sample,
    basic_spec,
    flower,
    key_attack,
    max_entangled,
    multipartite_pdit,
    omega_example,
    omega_tilde,
    pdit,
    random_private_spec,
    rec_ppt_cut,
    rec_ppt_expected_ppt,
    rec_ppt_key_state,
    twisting,
    untwisting,
    werner,
)

__version__ = "0.1.0"
