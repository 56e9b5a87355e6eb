"""Classical two-scale stochastic processes whose double covariance reproduces
bipartite density operators, with numerical checks of the identities involved."""
from .estimator import (
    Centering,
    MacroEstimate,
    MicroWindowSample,
    center,
    estimate,
    ingest_time_series,
    macro_covariance,
    micro_cross_covariance,
    normalize,
    superop_quadratic_form,
)
from .hilbert import (
    BipartiteShape,
    SchmidtForm,
    bell_state,
    check_density,
    hs_inner,
    matricize,
    partial_trace_a,
    partial_trace_b,
    schmidt_decompose,
    spectral_decompose,
    tensor_product,
    trace_distance,
    vectorize,
)
from .marginals import (
    block_kernel_closed_form,
    check_marginal_consistency,
    diagnostics,
    intrinsic_state,
    partial_trace_via_kernel,
    stochastic_kernel,
)
from .processes import (
    ConsistencySet,
    JumpSchedule,
    MacroRandomizer,
    MicroGrid,
    MixedScheme,
    SchmidtSchedule,
    TrajectoryPair,
    build_bell_schedule,
    build_pure_schedule,
    check_consistency,
    sample_jump_trajectory,
    sample_mixed_trajectory,
    sample_trajectory,
)

__version__ = "0.1.0"
