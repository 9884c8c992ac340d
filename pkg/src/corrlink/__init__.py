"""Distributed correlation estimation under a communication budget.

Two simulated parties share correlated Gaussian (or heavier-tailed) samples;
one sends a few carefully chosen bits, the other turns them into unbiased
correlation estimates. The package provides the protocols themselves with
bit-exact accounting, the closed-form variance and information theory for
each, and a reproducible Monte Carlo harness that checks one against the
other.
"""

from .analysis import (
    TheoryReport,
    additive_exact_variance,
    binary_example_theory,
    build_report,
    crlb_xvec,
    crlb_yvec,
    exact_max_variance,
    exact_threshold_variance,
    fisher_max,
    fisher_scalar_given_x,
    fisher_threshold,
    fisher_xvec,
    fisher_yvec,
    laplace_theory,
    linear_baseline_trace,
    pareto_theory,
    pareto_unquantized_floor,
    quantization_loss_bound,
    stopping_moment_bracket,
    stopping_second_moment,
    threshold_for_budget,
    unquantized_xvec_trace_bound,
    xvec_mse_bound,
    yvec_sum_mse,
    zhang_berger_optimal,
    zhang_berger_variance,
)
from .errors import (
    ConfigurationError,
    CorrlinkError,
    DomainError,
    SingularMatrixError,
    TrialFailureError,
    WaitCapExceededError,
)
from .estimators import (
    ApproxMLResult,
    EstimateReport,
    TrialBatch,
    additive_trials,
    approx_ml_estimate,
    clt_trials,
    estimate_additive_threshold,
    estimate_clt,
    estimate_linear_transform_baseline,
    estimate_max,
    estimate_pareto_quantized,
    estimate_threshold,
    estimate_xvec,
    estimate_xvec_unquantized,
    estimate_yvec,
    linear_baseline_trials,
    max_trials,
    pareto_trials,
    require_crossable_block,
    stopping_matrix_batch,
    stopping_params_from_body_budget,
    threshold_trials,
    xvec_paired_batch,
    xvec_trials,
    xvec_unquantized_trials,
    yvec_trials,
)
from .harness import (
    COLUMNS,
    ExperimentConfig,
    StreamingMoments,
    SweepRow,
    emit_csv,
    format_csv,
    parse_config,
    run_sweep,
)
from .linalg import CorrelationMatrix, invert, singular_value_lower_bound, sym_inv_sqrt, sym_sqrt
from .protocol import (
    BitLedger,
    LedgerEntry,
    LedgerMode,
    Selection,
    StoppingSetParams,
    Transcript,
    allocate_bits_pareto,
    allocate_bits_xvec,
    default_wait_cap,
    golomb_decode,
    golomb_encode,
    golomb_length,
    golomb_parameter,
    quantize_W_matrix,
    quantize_correlation_entries,
    quantize_pareto_value,
    select_max_index,
    select_stopping_set_indices,
    select_threshold_index,
)
from .sources import (
    AdditiveNoise,
    BlockAveraged,
    DoublySymmetricBinary,
    GaussianScalar,
    GaussianXVec,
    GaussianYVec,
    ParetoTwoSided,
    Rademacher,
    SampleStream,
    StdNormal,
    UnitLaplace,
    UnitUniform,
    crossing_prob,
    sample_stream,
    substream,
    true_correlations,
)
from .statmath import (
    MaxMoments,
    ThresholdMoments,
    geometric_entropy,
    geometric_entropy_inv,
    inverse_mills,
    max_normal_moments,
    phi,
    qfunc,
    qfunc_inv,
    truncated_normal_moments,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "CorrlinkError", "DomainError", "ConfigurationError", "SingularMatrixError",
    "WaitCapExceededError", "TrialFailureError",
    # statmath
    "phi", "qfunc", "qfunc_inv", "inverse_mills", "truncated_normal_moments",
    "ThresholdMoments", "geometric_entropy", "geometric_entropy_inv",
    "max_normal_moments", "MaxMoments",
    # linalg
    "CorrelationMatrix", "sym_sqrt", "sym_inv_sqrt", "invert",
    "singular_value_lower_bound",
    # sources
    "StdNormal", "UnitLaplace", "ParetoTwoSided", "UnitUniform", "Rademacher",
    "GaussianScalar", "GaussianYVec", "GaussianXVec", "AdditiveNoise",
    "DoublySymmetricBinary", "BlockAveraged", "SampleStream", "sample_stream",
    "substream", "crossing_prob", "true_correlations",
    # protocol
    "LedgerMode", "LedgerEntry", "BitLedger", "Transcript", "Selection",
    "StoppingSetParams", "golomb_parameter", "golomb_length", "golomb_encode",
    "golomb_decode", "select_max_index", "select_threshold_index",
    "select_stopping_set_indices", "quantize_W_matrix", "quantize_pareto_value",
    "quantize_correlation_entries", "allocate_bits_xvec", "allocate_bits_pareto",
    "default_wait_cap",
    # estimators
    "TrialBatch", "EstimateReport", "ApproxMLResult", "estimate_max",
    "estimate_threshold", "estimate_yvec", "estimate_xvec",
    "estimate_xvec_unquantized", "estimate_clt", "estimate_pareto_quantized",
    "estimate_additive_threshold", "estimate_linear_transform_baseline",
    "approx_ml_estimate", "max_trials", "threshold_trials", "yvec_trials",
    "xvec_trials", "xvec_unquantized_trials", "xvec_paired_batch", "clt_trials",
    "pareto_trials", "additive_trials", "linear_baseline_trials",
    "stopping_matrix_batch", "stopping_params_from_body_budget",
    "require_crossable_block",
    # analysis
    "TheoryReport", "zhang_berger_variance", "zhang_berger_optimal",
    "fisher_scalar_given_x", "fisher_threshold", "fisher_max",
    "exact_threshold_variance", "exact_max_variance", "threshold_for_budget",
    "fisher_yvec", "crlb_yvec", "yvec_sum_mse", "fisher_xvec", "crlb_xvec",
    "stopping_second_moment", "stopping_moment_bracket",
    "quantization_loss_bound", "xvec_mse_bound", "unquantized_xvec_trace_bound",
    "additive_exact_variance", "laplace_theory", "pareto_theory",
    "pareto_unquantized_floor", "binary_example_theory", "linear_baseline_trace",
    "build_report",
    # harness
    "ExperimentConfig", "SweepRow", "StreamingMoments", "COLUMNS",
    "parse_config", "run_sweep", "emit_csv", "format_csv",
]
