"""Calibration of the sampler shift factor against target correlations.

Three interchangeable routes turn a desired correlation value into the
shift factor fed to the sampler:

* ``tanfit`` -- a fitted arctangent map from time separation straight to
  shift factor, using the published constants for each kernel family;
* ``exact`` -- algebraic inversion of the sampler's own lag-1 covariance
  law, so the targeted correlation is matched exactly in expectation;
* ``table`` -- inversion of a Monte Carlo calibration table by monotone
  interpolation, useful when no closed-form law is trusted.

All three are wrapped in a :class:`CalibrationModel`, the interface the
sweep driver consumes.
"""

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import CalibrationResolutionError, InfeasibleCalibrationError
from .kernels import KernelKind
from .sampler import SamplerMode, estimate_lag1
from .streams import PURPOSE_CALIBRATION, derived_stream

#: Fitted (a, b) constants of the arctangent correlation map c = a tan(b f),
#: one pair per kernel family.
TAN_FIT_CONSTANTS = {
    KernelKind.SCALAR_LORENTZIAN: (0.01404, 1.58),
    KernelKind.UNIT_VARIANCE_QUARTIC: (0.672, 1.59),
    KernelKind.SQUEEZED_COSINE: (0.672, 1.59),
}

#: Default Monte Carlo calibration grid: 41 uniform shift factors.
DEFAULT_GRID_POINTS = 41
DEFAULT_GRID_LIMIT = 0.98

#: Minimum sequence length accepted when building a calibration table.
MIN_TABLE_STEPS = 10_000


class CalibrationMethod(enum.Enum):
    TAN_FIT = "tanfit"
    EXACT = "exact"
    TABLE = "table"


def method_by_name(name):
    """Look up a calibration method from its command-line name."""
    try:
        return CalibrationMethod(name)
    except ValueError:
        raise ValueError(f"unknown calibration method: {name!r}") from None


def tan_fit_constants(kind):
    """The fitted (a, b) pair for a kernel family."""
    try:
        return TAN_FIT_CONSTANTS[kind]
    except KeyError:
        raise ValueError(f"no tan-fit constants for kernel kind {kind!r}") from None


def c_of_f_tanfit(f, a, b):
    """Forward fitted map c = a tan(b f).

    Only defined on |f| < pi/(2 b), where the tangent branch is single
    valued; outside that the fit has no meaning.
    """
    if not (np.isfinite(a) and a > 0.0 and np.isfinite(b) and b > 0.0):
        raise ValueError("fit constants a and b must be positive and finite")
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("shift factor must be finite")
    limit = math.pi / (2.0 * b)
    if np.any(np.abs(f) >= limit):
        raise ValueError(
            f"fitted map is only defined for |f| < pi/(2b) = {limit:.6g}"
        )
    out = a * np.tan(b * f)
    return out if out.ndim else float(out)


def f_tanfit(kind, t0, k=None):
    """Shift factor at separation t0 from the fitted arctangent map.

    Implements the closed-form inverse of the fit for each kernel
    family. Accepts a scalar or array t0. The squeezed family needs the
    mode wavenumber ``k``.
    """
    a, b = tan_fit_constants(kind)
    t0 = np.asarray(t0, dtype=float)
    if not np.all(np.isfinite(t0)):
        raise ValueError("time separation must be finite")
    t2 = t0 * t0
    if kind is KernelKind.SCALAR_LORENTZIAN:
        arg = (4.0 - t2) / (4.0 * math.pi * a * (4.0 + t2) ** 2)
    elif kind is KernelKind.UNIT_VARIANCE_QUARTIC:
        arg = (1.0 - 6.0 * t2 + t2 * t2) / (a * (1.0 + t2) ** 4)
    elif kind is KernelKind.SQUEEZED_COSINE:
        if k is None:
            raise ValueError("squeezed kernel requires a wavenumber k")
        arg = np.cos(k * t0) / a
    else:
        raise ValueError(f"no fitted map for kernel kind {kind!r}")
    out = np.arctan(arg) / b
    return out if out.ndim else float(out)


def f_exact_chain(c, sigma2):
    """Shift factor of a raw chain whose lag-1 covariance is exactly c."""
    return f_exact(c, sigma2, SamplerMode.CHAIN_RAW)


def f_exact(c, sigma2, mode):
    """Shift factor whose lag-1 covariance law equals c exactly.

    Inverts the stationary law of the given sampler mode at marginal
    scale sigma2. The sequential-chain law c = f sigma2 / (1 - f^2) is
    invertible for every finite c; the pair and normalized-chain law
    c = f sigma2 only reaches |c| <= sigma2 and raises
    :class:`InfeasibleCalibrationError` beyond that.
    """
    c = float(c)
    sigma2 = float(sigma2)
    if not np.isfinite(c):
        raise ValueError("target correlation must be finite")
    if not (np.isfinite(sigma2) and sigma2 > 0.0):
        raise ValueError("sigma2 must be positive and finite")
    if mode is SamplerMode.CHAIN_RAW:
        # Root of c f^2 + sigma2 f - c = 0 inside (-1, 1), written in the
        # cancellation-free form so f(0) = 0 exactly.
        return 2.0 * c / (sigma2 + math.sqrt(sigma2 * sigma2 + 4.0 * c * c))
    f = c / sigma2
    if abs(f) > 1.0:
        raise InfeasibleCalibrationError(
            f"target correlation {c:.6g} exceeds the reachable band "
            f"|c| <= sigma2 = {sigma2:.6g} for mode {mode.value!r}"
        )
    return f


def default_f_grid():
    """Uniform calibration grid of shift factors on [-0.98, 0.98]."""
    return np.linspace(-DEFAULT_GRID_LIMIT, DEFAULT_GRID_LIMIT,
                       DEFAULT_GRID_POINTS)


@dataclass(frozen=True)
class CalibrationTable:
    """Monte Carlo estimates of the correlation at each grid shift factor.

    The table stores the empirical lag-1 covariance measured at every
    grid value of f, and inverts the resulting monotone relation with a
    shape-preserving (PCHIP) interpolant. Both f and the estimates must
    be strictly increasing; a table too noisy to be monotone cannot be
    inverted and is rejected at construction.

    Attributes
    ----------
    f_values, c_estimates, stderrs : tuple of float
        Grid shift factors, measured correlations, and their standard
        errors, in matching order.
    mode : SamplerMode
        Sampler mode the table was measured with.
    sigma2 : float
        Marginal scale the table was measured at.
    steps_per_point : int
        Sequence length behind each estimate.
    seed : int or None
        Seed used to build the table; None for tables loaded from disk.
    """

    f_values: tuple
    c_estimates: tuple
    stderrs: tuple
    mode: SamplerMode
    sigma2: float
    steps_per_point: int
    seed: int = None

    CSV_HEADER = ("f", "c_estimate", "stderr", "n_steps")

    def __post_init__(self):
        n = len(self.f_values)
        if n < 4:
            raise ValueError("calibration table needs at least 4 grid points")
        if len(self.c_estimates) != n or len(self.stderrs) != n:
            raise ValueError("table columns must have matching lengths")
        fv = np.asarray(self.f_values, dtype=float)
        cv = np.asarray(self.c_estimates, dtype=float)
        if not (np.all(np.isfinite(fv)) and np.all(np.isfinite(cv))):
            raise ValueError("table entries must be finite")
        if np.any(np.diff(fv) <= 0.0):
            raise ValueError("grid shift factors must be strictly increasing")
        if np.any(np.diff(cv) <= 0.0):
            raise CalibrationResolutionError(
                "measured correlations are not strictly increasing across the "
                "grid; rebuild the table with more steps per point"
            )

    @cached_property
    def _inverse(self):
        return PchipInterpolator(np.asarray(self.c_estimates, dtype=float),
                                 np.asarray(self.f_values, dtype=float))

    @property
    def c_min(self):
        return self.c_estimates[0]

    @property
    def c_max(self):
        return self.c_estimates[-1]

    def invert(self, c):
        """Shift factor whose measured correlation is c.

        Raises :class:`InfeasibleCalibrationError` when c lies outside
        the measured band.
        """
        c = float(c)
        if not np.isfinite(c):
            raise ValueError("target correlation must be finite")
        if c < self.c_min or c > self.c_max:
            raise InfeasibleCalibrationError(
                f"target correlation {c:.6g} lies outside the calibrated band "
                f"[{self.c_min:.6g}, {self.c_max:.6g}]"
            )
        return float(self._inverse(c))

    def rows(self):
        """Table rows as (f, c_estimate, stderr, n_steps) tuples."""
        return [
            (f, c, s, self.steps_per_point)
            for f, c, s in zip(self.f_values, self.c_estimates, self.stderrs)
        ]

    @classmethod
    def from_rows(cls, rows, mode, sigma2, seed=None):
        """Rebuild a table from (f, c_estimate, stderr, n_steps) rows."""
        rows = list(rows)
        if not rows:
            raise ValueError("calibration table rows are empty")
        steps = {int(round(r[3])) for r in rows}
        if len(steps) != 1:
            raise ValueError("table rows disagree on steps per point")
        return cls(
            f_values=tuple(float(r[0]) for r in rows),
            c_estimates=tuple(float(r[1]) for r in rows),
            stderrs=tuple(float(r[2]) for r in rows),
            mode=mode,
            sigma2=float(sigma2),
            steps_per_point=steps.pop(),
            seed=seed,
        )


def calibrate_monte_carlo(mode, sigma2=1.0, f_grid=None, steps_per_point=200_000,
                          seed=0, threads=1):
    """Measure the correlation at each grid shift factor and tabulate it.

    Every grid point runs on its own derived stream, so the table is
    reproducible bit for bit at any thread count. The sequence length
    must be large enough that the measured correlations come out
    strictly increasing in f; otherwise the table cannot be inverted
    and a :class:`CalibrationResolutionError` is raised.
    """
    steps_per_point = int(steps_per_point)
    if steps_per_point < MIN_TABLE_STEPS:
        raise ValueError(
            f"steps_per_point must be at least {MIN_TABLE_STEPS} "
            "for a usable calibration table"
        )
    if f_grid is None:
        f_grid = default_f_grid()
    f_grid = np.asarray(f_grid, dtype=float)
    if f_grid.ndim != 1 or f_grid.size < 4:
        raise ValueError("f_grid must be one-dimensional with at least 4 points")
    if not np.all(np.isfinite(f_grid)):
        raise ValueError("f_grid entries must be finite")
    if np.any(np.diff(f_grid) <= 0.0):
        raise ValueError("f_grid must be strictly increasing")
    limit = 1.0 if mode is not SamplerMode.CHAIN_RAW else np.nextafter(1.0, 0.0)
    if np.any(np.abs(f_grid) > limit):
        raise ValueError("f_grid entries must lie inside the stationary band")

    def run_point(i):
        stream = derived_stream(seed, PURPOSE_CALIBRATION, i)
        return estimate_lag1(float(f_grid[i]), sigma2, mode,
                             steps_per_point, stream)

    if threads and int(threads) > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            results = list(pool.map(run_point, range(f_grid.size)))
    else:
        results = [run_point(i) for i in range(f_grid.size)]

    return CalibrationTable(
        f_values=tuple(float(f) for f in f_grid),
        c_estimates=tuple(r[0] for r in results),
        stderrs=tuple(r[1] for r in results),
        mode=mode,
        sigma2=float(sigma2),
        steps_per_point=steps_per_point,
        seed=int(seed),
    )


@dataclass(frozen=True)
class CalibrationModel:
    """A calibration route bound to a sampler mode.

    This is the object the sweep driver consumes: it exposes the mode
    to sample with, a short method label for reports, and
    :meth:`f_for`, which turns one grid separation into a shift factor.
    """

    method: CalibrationMethod
    mode: SamplerMode
    table: CalibrationTable = None

    def __post_init__(self):
        if self.method is CalibrationMethod.TABLE:
            if self.table is None:
                raise ValueError("table calibration requires a table")
            if self.table.mode is not self.mode:
                raise ValueError("table was measured with a different mode")
        elif self.table is not None:
            raise ValueError("only table calibration carries a table")

    @property
    def sampler_mode(self):
        return self.mode

    @property
    def method_label(self):
        return self.method.value

    def f_for(self, kernel, t0, sigma2):
        """Shift factor targeting the kernel's correlation at separation t0."""
        if self.method is CalibrationMethod.TAN_FIT:
            return f_tanfit(kernel.kind, t0, kernel.wavenumber_k)
        c = float(kernel.eval(t0))
        if self.method is CalibrationMethod.EXACT:
            return f_exact(c, sigma2, self.mode)
        if not math.isclose(self.table.sigma2, float(sigma2),
                            rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(
                f"table was measured at sigma2 = {self.table.sigma2:.6g}, "
                f"not {float(sigma2):.6g}"
            )
        return self.table.invert(c)


def tan_fit_calibration(mode=SamplerMode.CHAIN_RAW):
    """Calibration through the fitted arctangent map."""
    return CalibrationModel(method=CalibrationMethod.TAN_FIT, mode=mode)


def exact_inversion(mode):
    """Calibration by exact inversion of the mode's covariance law."""
    return CalibrationModel(method=CalibrationMethod.EXACT, mode=mode)


def table_calibration(table):
    """Calibration through a measured Monte Carlo table."""
    return CalibrationModel(method=CalibrationMethod.TABLE, mode=table.mode,
                            table=table)
