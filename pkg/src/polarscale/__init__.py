"""polarscale: finite-length scaling analysis for polar codes.

Quantities covered: the three BMS channel parameters and their splitting
transform, exact erasure-channel polarization statistics, the grid
operator spectrum and scaling-exponent fixed point, certified inf/sup
test-function bounds (Sturm chains, Descartes certificates, interval
branch-and-bound), random-map threshold points and the ergodic
interval-length exponent, polar-code construction scans, and the
universal lower/upper blocklength scaling bounds.
"""

from .channels import (
    BmsChannel,
    ChannelParams,
    bawgn_capacity,
    bawgn_quantization_error,
    check_parameter_bounds,
    degrade_merge,
    density_from_json,
    density_to_json,
    h2,
    h2inv,
    make_bawgn,
    make_bec,
    make_bsc,
    params,
    parse_channel,
    split,
)
from .bec import (
    QProfile,
    SparseOperator,
    build_operator,
    expectation_of_test,
    fit_c_ab,
    iterate_q,
    prob_bracket,
    prob_curve,
    prob_in_interval,
    subdominant_eigenvalues,
)
from .exactpoly import (
    CertifiedBound,
    ConcavityCertificate,
    RationalPoly,
    certify_concavity,
    f_eval,
    infimum_ratio,
    mu_lower,
    polar_iterate,
    sturm_root_count,
)
from .bounds import (
    G_TABLE3,
    G_UNIVERSAL,
    SupEnclosure,
    TestFunction,
    compute_Lg,
    sup_ratio_bec,
    universal_decay_34,
    verify_universal_decay,
)
from .randmaps import (
    ERGODIC_RATE,
    MapWord,
    RngStream,
    apply_word,
    ergodic_closed_form,
    estimate_log_length,
    integral_decay_check,
    ks_uniform_statistic,
    preimage_interval,
    threshold_point,
    threshold_sample,
)
from .construction import (
    BlocklengthScan,
    ChannelLevelStats,
    CodeSelection,
    LevelTables,
    ScalingFit,
    SubchannelRecord,
    blocklength_for,
    fit_scaling_exponent,
    good_indices,
    subchannel_params,
)
from .scaling import (
    LowerBoundCert,
    UpperBoundCert,
    aux_lemmas_check,
    c1_constant,
    c2_constant,
    c3_constant,
    h2inv_floor,
    lemma5_verify,
    lemma6_bound,
    lower_bound_cert,
    theorem3_construction_check,
    theorem3_rate_cap,
    theorem4_blocklength,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
