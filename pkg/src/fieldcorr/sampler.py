"""Shift-chain sampling of correlated Gaussian measurement outcomes.

Each outcome is drawn from a Gaussian whose peak is displaced by f times
the previous outcome, which imprints a prescribed lag-1 correlation on
the sequence. Three modes fix the details the displacement rule leaves
open:

* ``pair``: independent two-measurement experiments; the first outcome
  of each pair is centered at zero, the second at f times the first.
  Lag-1 covariance f sigma^2.
* ``chain-raw``: one long chain, innovation variance sigma^2 throughout.
  Stationary marginal variance sigma^2 / (1 - f^2), lag-1 covariance
  f sigma^2 / (1 - f^2); requires |f| < 1 strictly.
* ``chain-normalized``: one long chain with innovations rescaled to
  sigma^2 (1 - f^2) so the marginal variance stays exactly sigma^2.
  Lag-1 covariance f sigma^2.
"""

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import InfeasibleCalibrationError, NonStationaryChainError
from .streams import PURPOSE_SWEEP, NormalStream, derived_stream

#: Conservative stderr inflation for the serial dependence of chain products.
CHAIN_STDERR_INFLATION = math.sqrt(3.0)


class SamplerMode(enum.Enum):
    PAIR = "pair"
    CHAIN_RAW = "chain-raw"
    CHAIN_NORMALIZED = "chain-normalized"

    @property
    def is_chain(self):
        return self is not SamplerMode.PAIR


def mode_by_name(name):
    for mode in SamplerMode:
        if mode.value == name:
            return mode
    raise ValueError(f"unknown sampler mode: {name!r}")


def lag1_covariance_law(f, sigma2, mode):
    """Exact stationary lag-1 covariance produced by a mode at shift f."""
    if mode is SamplerMode.CHAIN_RAW:
        return f * sigma2 / (1.0 - f * f)
    return f * sigma2


def marginal_variance_law(f, sigma2, mode):
    """Exact stationary marginal variance of a mode at shift f."""
    if mode is SamplerMode.CHAIN_RAW:
        return sigma2 / (1.0 - f * f)
    return sigma2


def innovation_scale(f, sigma2, mode):
    """Standard deviation of the fresh Gaussian added at each draw."""
    if mode is SamplerMode.CHAIN_NORMALIZED:
        return math.sqrt(sigma2 * (1.0 - f * f))
    return math.sqrt(sigma2)


def first_draw_scale(f, sigma2, mode):
    """Standard deviation of the first draw of a fresh sequence.

    Raw chains start from their stationary marginal to avoid burn-in
    bias; the other modes start centered at zero with variance sigma2,
    which is already their stationary law.
    """
    if mode is SamplerMode.CHAIN_RAW:
        return math.sqrt(sigma2 / (1.0 - f * f))
    return math.sqrt(sigma2)


@dataclass
class ShiftChain:
    """Stateful correlated sampler; single-owner mutable state.

    Parameters
    ----------
    f : float
        Shift factor in [-1, 1]; the next Gaussian is centered at f
        times the previous outcome.
    sigma2 : float
        Base Gaussian variance of a single unshifted measurement.
    mode : SamplerMode
    stream : NormalStream
        Source of standard normal innovations.
    """

    f: float
    sigma2: float
    mode: SamplerMode
    stream: NormalStream
    last_outcome: float = None
    _pair_parity: int = field(default=0, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.f) and abs(self.f) <= 1.0):
            raise ValueError("shift factor f must satisfy |f| <= 1")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0.0):
            raise ValueError("sigma2 must be positive")
        if self.mode is SamplerMode.CHAIN_RAW and abs(self.f) == 1.0:
            raise NonStationaryChainError(
                "a raw chain requires |f| < 1 strictly; its stationary "
                "variance sigma^2 / (1 - f^2) diverges at |f| = 1"
            )

    @property
    def _sigma(self):
        return math.sqrt(self.sigma2)

    @property
    def _innovation_scale(self):
        return innovation_scale(self.f, self.sigma2, self.mode)

    @property
    def _first_draw_scale(self):
        return first_draw_scale(self.f, self.sigma2, self.mode)

    def draw_next(self):
        """Draw one outcome and advance the chain state."""
        return float(self.draw(1)[0])

    def draw(self, n):
        """Draw n successive outcomes as an array.

        Bitwise identical to n repeated calls of :meth:`draw_next`.
        """
        n = int(n)
        if n < 1:
            raise ValueError("draw count must be at least 1")
        z = self.stream.normals(n)
        if self.mode.is_chain:
            x = self._draw_chain(z)
        else:
            x = self._draw_pairs(z)
        self.last_outcome = float(x[-1])
        return x

    def _draw_chain(self, z):
        f = self.f
        if self.last_outcome is None:
            x0 = self._first_draw_scale * z[0]
            eps = self._innovation_scale * z[1:]
            if eps.size == 0:
                return np.array([x0])
            rest = lfilter([1.0], [1.0, -f], eps, zi=np.array([f * x0]))[0]
            return np.concatenate(([x0], rest))
        eps = self._innovation_scale * z
        return lfilter([1.0], [1.0, -f], eps, zi=np.array([f * self.last_outcome]))[0]

    def _draw_pairs(self, z):
        x = self._sigma * z
        start = self._pair_parity
        if start == 1:
            x[0] += self.f * self.last_outcome
        second = np.arange(1 + start, x.size, 2)
        x[second] += self.f * x[second - 1]
        self._pair_parity = (start + x.size) % 2
        return x


def _product_stats(products, inflate):
    m = products.size
    estimate = float(products.mean())
    stderr = float(products.std(ddof=1) / math.sqrt(m))
    if inflate:
        stderr *= CHAIN_STDERR_INFLATION
    return estimate, stderr


def estimate_lag_covariance(f, sigma2, mode, n_steps, stream, lag=1):
    """Estimate the lag-k covariance of a fresh sampler sequence.

    ``n_steps`` counts sequential measurements for the chain modes
    (giving ``n_steps - lag`` products) and repeated two-measurement
    experiments for pair mode (giving ``n_steps`` products, lag 1 only).
    The standard error comes from the empirical variance of the
    products; for chains it is inflated by sqrt(3) as a conservative
    allowance for their serial dependence.

    Returns
    -------
    (estimate, stderr) : (float, float)
    """
    n_steps = int(n_steps)
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    if lag < 1:
        raise ValueError("lag must be at least 1")
    chain = ShiftChain(f=f, sigma2=sigma2, mode=mode, stream=stream)
    if mode.is_chain:
        if n_steps <= lag:
            raise ValueError("n_steps must exceed the lag")
        x = chain.draw(n_steps)
        products = x[: n_steps - lag] * x[lag:]
        return _product_stats(products, inflate=True)
    if lag != 1:
        raise ValueError("pair mode only defines the lag-1 covariance")
    x = chain.draw(2 * n_steps)
    products = x[0::2] * x[1::2]
    return _product_stats(products, inflate=False)


def estimate_lag1(f, sigma2, mode, n_steps, stream):
    """Average product of consecutive outcomes over a fresh sequence."""
    return estimate_lag_covariance(f, sigma2, mode, n_steps, stream, lag=1)


@dataclass(frozen=True)
class SweepRow:
    """One grid point of a correlation sweep."""

    t0: float
    c_analytic: float
    f_shift: float
    c_simulated: float
    stderr: float
    n_steps: int
    feasible: bool = True

    CSV_HEADER = ("t0", "c_analytic", "f_shift", "c_simulated", "stderr", "n_steps")

    def csv_values(self):
        return (self.t0, self.c_analytic, self.f_shift,
                self.c_simulated, self.stderr, self.n_steps)


@dataclass(frozen=True)
class SweepResult:
    """Correlation sweep over a uniform grid of time separations."""

    rows: tuple
    kernel_label: str
    wavenumber_k: float
    method_label: str
    mode: SamplerMode
    sigma2: float
    seed: int
    n_points: int
    t0_max: float
    steps_per_point: int

    @property
    def feasible_rows(self):
        return [r for r in self.rows if r.feasible]

    def deviations(self):
        return np.array([r.c_simulated - r.c_analytic for r in self.feasible_rows])

    @property
    def max_abs_deviation(self):
        return float(np.abs(self.deviations()).max())

    @property
    def rms_deviation(self):
        return float(np.sqrt(np.mean(self.deviations() ** 2)))

    @property
    def n_infeasible(self):
        return len(self.rows) - len(self.feasible_rows)

    def manifest_config(self):
        return {
            "kernel": self.kernel_label,
            "wavenumber_k": self.wavenumber_k,
            "method": self.method_label,
            "mode": self.mode.value,
            "sigma2": self.sigma2,
            "n_points": self.n_points,
            "t0_max": self.t0_max,
            "steps_per_point": self.steps_per_point,
        }


def correlation_sweep(kernel, calib, n_points=801, t0_max=8.0,
                      steps_per_point=20_000, seed=0, sigma2=None, threads=1):
    """Simulate the correlation function point by point across separations.

    For each t0 on the uniform grid [0, t0_max] the calibration model
    supplies a shift factor targeting the analytic correlation, a fresh
    sequence is sampled, and its lag-1 covariance estimate is recorded
    next to the analytic value. Each grid point uses a stream derived
    from (seed, point index), so the result is reproducible bit for bit
    at any thread count.

    Points whose target the mode cannot reach are recorded as
    infeasible and the sweep continues.
    """
    n_points = int(n_points)
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    if not t0_max > 0.0:
        raise ValueError("t0_max must be positive")
    if int(steps_per_point) < 100:
        raise ValueError("steps_per_point must be at least 100")
    if sigma2 is None:
        sigma2 = kernel.variance
    mode = calib.sampler_mode
    grid = np.linspace(0.0, t0_max, n_points)

    def run_point(i):
        t0 = float(grid[i])
        c_analytic = float(kernel.eval(t0))
        stream = derived_stream(seed, PURPOSE_SWEEP, i)
        try:
            f_shift = calib.f_for(kernel, t0, sigma2)
        except InfeasibleCalibrationError:
            return SweepRow(t0=t0, c_analytic=c_analytic, f_shift=float("nan"),
                            c_simulated=float("nan"), stderr=float("nan"),
                            n_steps=int(steps_per_point), feasible=False)
        est, err = estimate_lag1(f_shift, sigma2, mode, steps_per_point, stream)
        return SweepRow(t0=t0, c_analytic=c_analytic, f_shift=f_shift,
                        c_simulated=est, stderr=err, n_steps=int(steps_per_point))

    if threads and int(threads) > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            rows = tuple(pool.map(run_point, range(n_points)))
    else:
        rows = tuple(run_point(i) for i in range(n_points))

    return SweepResult(
        rows=rows, kernel_label=kernel.label, wavenumber_k=kernel.wavenumber_k,
        method_label=calib.method_label, mode=mode, sigma2=float(sigma2),
        seed=int(seed), n_points=n_points, t0_max=float(t0_max),
        steps_per_point=int(steps_per_point),
    )
