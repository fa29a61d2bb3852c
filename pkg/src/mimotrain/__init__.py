"""MIMO link-level simulation and closed-form BER analysis for two training
schemes: time-division multiplexed pilots and data-dependent superimposed
pilots, both with least-squares channel estimation and zero-forcing
detection."""

from .ddst import DdstFrameResult, ls_estimate_ddst, run_frame_ddst, transmit_ddst, zf_detect_ddst
from .linalg import (
    SingularMatrixError,
    null_projector,
    pinv,
    regularized_pinv,
    sample_complex_gaussian,
    stream_rng,
    taylor_pinv,
)
from .model import (
    PowerConfig,
    SystemDims,
    apply_distortion,
    ddst_pilot,
    qpsk_demodulate,
    qpsk_modulate,
    random_bits,
    tdmt_pilot,
)
from .montecarlo import (
    BerEstimate,
    TrialPlan,
    bits_per_frame,
    cf_distance,
    empirical_cf,
    empirical_noise_samples,
    estimate_ber,
    rmt_decay,
    rmt_validators,
    wilson_interval,
)
from .power import (
    AllocationResult,
    grid_search_delta,
    make_power_config,
    optimal_power_ddst,
    optimal_power_tdmt,
    power_ratio_limits,
)
from .tdmt import TdmtFrameResult, ls_estimate_tdmt, mse_theory_tdmt, run_frame_tdmt, zf_detect_tdmt
from .theory import (
    MixtureSpec,
    TheoryParams,
    ber_bound_gap,
    ber_ddst_theory,
    ber_tdmt_highsnr,
    ber_tdmt_theory,
    cf_theory_ddst,
    cf_theory_tdmt,
    class_mean_mixture,
    ddst_floor,
    delta_d,
    delta_t,
    gamma_pdf,
    j_function,
    j_function_quadrature,
    mixture_spec,
    q_function,
    theory_params,
)

__version__ = "0.1.0"
