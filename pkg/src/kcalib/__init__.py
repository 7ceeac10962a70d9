"""Kernel calibration errors and calibration tests for probabilistic models."""

__version__ = "0.1.0"

from .distributions import (
    Categorical,
    ClassLabel,
    Count,
    DiagNormal,
    Laplace,
    Mixture,
    Prediction,
    RealVector,
    TruncatedCountable,
    mixture_wasserstein,
    temperature_scale,
    wasserstein2,
)
from .estimators import (
    Dataset,
    EstimateReport,
    TestLocations,
    h_squared_hat,
    skce_block,
    skce_plug_in,
    skce_ustat,
    ucme_squared,
)
from .kernels import (
    Analytic,
    GaussianRBF,
    KernelSpec,
    KroneckerDelta,
    LaplacianExp,
    MonteCarlo,
    MW,
    ParamEuclidean,
    PredictionKernel,
    W2,
    default_kernel_spec,
    double_expect_target_kernel,
    eval_h,
    eval_kernel,
    expect_target_kernel,
)
from .calibration_tests import (
    TestReport,
    default_cme_locations,
    test_asymptotic_block,
    test_asymptotic_sqrt_block,
    test_bootstrap_ustat,
    test_cme,
)

__all__ = [
    "Analytic",
    "Categorical",
    "ClassLabel",
    "Count",
    "Dataset",
    "DiagNormal",
    "EstimateReport",
    "GaussianRBF",
    "KernelSpec",
    "KroneckerDelta",
    "Laplace",
    "LaplacianExp",
    "Mixture",
    "MonteCarlo",
    "MW",
    "ParamEuclidean",
    "Prediction",
    "PredictionKernel",
    "RealVector",
    "TestLocations",
    "TestReport",
    "TruncatedCountable",
    "W2",
    "default_cme_locations",
    "default_kernel_spec",
    "double_expect_target_kernel",
    "eval_h",
    "eval_kernel",
    "expect_target_kernel",
    "h_squared_hat",
    "mixture_wasserstein",
    "skce_block",
    "skce_plug_in",
    "skce_ustat",
    "temperature_scale",
    "test_asymptotic_block",
    "test_asymptotic_sqrt_block",
    "test_bootstrap_ustat",
    "test_cme",
    "ucme_squared",
    "wasserstein2",
]
