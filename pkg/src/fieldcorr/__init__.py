"""Correlated Gaussian field-measurement simulator.

The package evaluates analytic correlation kernels of time-averaged
quantum fields, verifies the smeared two-point function by direct
quadrature, calibrates a shifted-Gaussian sampler so that consecutive
outcomes reproduce a target correlation, and applies the sampler to
correlated random walks.

Public API highlights:

* kernels: :func:`scalar_lorentzian`, :func:`unit_variance_quartic`,
  :func:`squeezed_cosine`, :func:`zero_crossings`,
  :func:`integral_to_infinity`;
* quadrature check: :class:`SmearingSpec`, :func:`verify_closed_form`;
* sampling: :class:`ShiftChain`, :class:`SamplerMode`,
  :func:`correlation_sweep`, :func:`estimate_lag1`;
* calibration: :func:`tan_fit_calibration`, :func:`exact_inversion`,
  :func:`table_calibration`, :func:`calibrate_monte_carlo`;
* walks: :func:`run_walk_ensemble`, :func:`fit_sqrt_growth`,
  :func:`loglog_exponent`, :func:`ar1_msd_closed_form`.
"""

from ._version import __version__
from .errors import (
    CalibrationResolutionError,
    FieldcorrError,
    InfeasibleCalibrationError,
    NonIntegrableKernelError,
    NonStationaryChainError,
    QuadratureConvergenceError,
)
from .kernels import (
    CorrelationKernel,
    KernelKind,
    eval_scalar,
    eval_squeezed,
    eval_unit_quartic,
    integral_to_infinity,
    kernel_by_name,
    scalar_lorentzian,
    squeezed_cosine,
    unit_variance_quartic,
    zero_crossings,
)
from .smearing import (
    SmearingPoint,
    SmearingReport,
    SmearingSpec,
    lorentzian,
    lorentzian_derivative,
    smeared_correlation_quadrature,
    verify_closed_form,
)
from .streams import NormalStream, derived_stream
from .sampler import (
    SamplerMode,
    ShiftChain,
    SweepResult,
    SweepRow,
    correlation_sweep,
    estimate_lag1,
    estimate_lag_covariance,
    lag1_covariance_law,
    marginal_variance_law,
    mode_by_name,
)
from .calibration import (
    CalibrationMethod,
    CalibrationModel,
    CalibrationTable,
    c_of_f_tanfit,
    calibrate_monte_carlo,
    default_f_grid,
    exact_inversion,
    f_exact,
    f_exact_chain,
    f_tanfit,
    method_by_name,
    table_calibration,
    tan_fit_calibration,
)
from .walker import (
    GrowthExponentFit,
    LinearMsdFit,
    WalkEnsembleResult,
    ar1_msd_closed_form,
    fit_sqrt_growth,
    loglog_exponent,
    run_walk_ensemble,
)
from .reporting import RunManifest, read_csv, sha256_of, write_csv

__all__ = [
    "__version__",
    "FieldcorrError",
    "NonIntegrableKernelError",
    "QuadratureConvergenceError",
    "InfeasibleCalibrationError",
    "CalibrationResolutionError",
    "NonStationaryChainError",
    "CorrelationKernel",
    "KernelKind",
    "eval_scalar",
    "eval_unit_quartic",
    "eval_squeezed",
    "scalar_lorentzian",
    "unit_variance_quartic",
    "squeezed_cosine",
    "kernel_by_name",
    "zero_crossings",
    "integral_to_infinity",
    "SmearingSpec",
    "SmearingPoint",
    "SmearingReport",
    "lorentzian",
    "lorentzian_derivative",
    "smeared_correlation_quadrature",
    "verify_closed_form",
    "NormalStream",
    "derived_stream",
    "SamplerMode",
    "ShiftChain",
    "SweepRow",
    "SweepResult",
    "mode_by_name",
    "lag1_covariance_law",
    "marginal_variance_law",
    "estimate_lag1",
    "estimate_lag_covariance",
    "correlation_sweep",
    "CalibrationMethod",
    "CalibrationModel",
    "CalibrationTable",
    "method_by_name",
    "c_of_f_tanfit",
    "f_tanfit",
    "f_exact",
    "f_exact_chain",
    "default_f_grid",
    "calibrate_monte_carlo",
    "tan_fit_calibration",
    "exact_inversion",
    "table_calibration",
    "WalkEnsembleResult",
    "LinearMsdFit",
    "GrowthExponentFit",
    "run_walk_ensemble",
    "ar1_msd_closed_form",
    "fit_sqrt_growth",
    "loglog_exponent",
    "RunManifest",
    "write_csv",
    "read_csv",
    "sha256_of",
]
