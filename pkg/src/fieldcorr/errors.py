"""Exception types shared across the package."""


class FieldcorrError(Exception):
    """Base class for all errors raised by this package."""


class NonIntegrableKernelError(FieldcorrError):
    """The kernel has no improper Riemann integral over [0, inf)."""


class QuadratureConvergenceError(FieldcorrError):
    """Adaptive quadrature did not reach the requested tolerance.

    Carries the best available estimate and the error bound actually
    achieved, so callers can report partial results.
    """

    def __init__(self, message, estimate, achieved_bound):
        super().__init__(message)
        self.estimate = estimate
        self.achieved_bound = achieved_bound


class InfeasibleCalibrationError(FieldcorrError):
    """The target correlation cannot be produced by the chosen sampler mode."""


class CalibrationResolutionError(FieldcorrError):
    """Monte Carlo calibration estimates are not monotone in the shift factor.

    Statistical noise exceeded the grid spacing; rerun with more steps
    per grid point or a coarser grid.
    """


class NonStationaryChainError(FieldcorrError):
    """A raw chain with |f| = 1 has no stationary distribution."""
