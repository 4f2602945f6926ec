"""Correlated random walks driven by the shift sampler.

Each walker takes steps equal to successive sampled field values with a
unit coupling, so its position after N steps is the partial sum of one
correlated sequence. Positive shift factors make the mean squared
displacement grow faster than the uncorrelated walk, negative ones
slower; both remain asymptotically linear in N (square-root growth of
the displacement itself).

The module provides the ensemble simulation, closed-form oracles for
the partial-sum variance of every sampler mode, and the two fits used
to summarize growth: a linear fit of msd against N and a log-log
growth-exponent fit.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import NonStationaryChainError
from .sampler import (SamplerMode, first_draw_scale, innovation_scale,
                      marginal_variance_law)
from .streams import PURPOSE_WALK, derived_stream

#: Number of walker blocks an ensemble is split into. Each block runs on
#: its own derived stream, so results are reproducible bit for bit at
#: any thread count, and the block spread feeds the fit standard errors.
DEFAULT_WALK_BLOCKS = 100

#: Reference linear-fit coefficients (c1, c0) of msd = c1 N + c0 for
#: unit-variance sequential walks at representative shift factors. The
#: absolute normalization behind this reference data is unreconciled
#: with a unit-variance walk (the f = 0 slope is not 1), so only slope
#: ratios and ordering are meaningful comparison targets.
REFERENCE_FIT_COEFFICIENTS = {
    -0.5: (0.68, 0.039),
    0.0: (1.32, 0.092),
    0.5: (5.35, 8.13),
}


def _validate_walk_params(f, sigma2, mode):
    if not (math.isfinite(f) and abs(f) <= 1.0):
        raise ValueError("shift factor f must satisfy |f| <= 1")
    if not (math.isfinite(sigma2) and sigma2 > 0.0):
        raise ValueError("sigma2 must be positive")
    if mode is SamplerMode.CHAIN_RAW and abs(f) == 1.0:
        raise NonStationaryChainError(
            "a raw chain requires |f| < 1 strictly; its stationary "
            "variance sigma^2 / (1 - f^2) diverges at |f| = 1"
        )


def _block_steps(f, sigma2, mode, n_walkers, n_steps, stream):
    """Step matrix (n_walkers, n_steps) for one block of fresh walkers.

    Row w consumes the stream exactly as one fresh ShiftChain drawing
    n_steps outcomes would, with the rows' normals taken contiguously.
    """
    z = stream.normals(n_walkers * n_steps).reshape(n_walkers, n_steps)
    if mode.is_chain:
        x = np.empty_like(z)
        x[:, 0] = first_draw_scale(f, sigma2, mode) * z[:, 0]
        if n_steps > 1:
            eps = innovation_scale(f, sigma2, mode) * z[:, 1:]
            zi = (f * x[:, :1])
            x[:, 1:] = lfilter([1.0], [1.0, -f], eps, axis=1, zi=zi)[0]
        return x
    x = math.sqrt(sigma2) * z
    seconds = np.arange(1, n_steps, 2)
    x[:, seconds] += f * x[:, seconds - 1]
    return x


@dataclass(frozen=True)
class WalkEnsembleResult:
    """Mean squared displacement of a walker ensemble versus step count.

    ``msd[N]`` is the ensemble average of y_N^2 for N = 0 .. n_steps,
    with ``msd[0] = 0`` exactly, and ``stderr`` the standard error over
    walkers. The per-block msd curves and block sizes are kept so fit
    routines can propagate a standard error through the fit.
    """

    f: float
    sigma2: float
    mode: SamplerMode
    n_steps: int
    n_walkers: int
    seed: int
    msd: np.ndarray
    stderr: np.ndarray
    block_msd: np.ndarray
    block_weights: np.ndarray

    CSV_HEADER = ("N", "msd", "stderr")

    @property
    def steps(self):
        """Step counts 0 .. n_steps matching the msd rows."""
        return np.arange(self.n_steps + 1)

    @property
    def n_blocks(self):
        return len(self.block_weights)

    def csv_rows(self):
        return [
            (int(n), float(m), float(s))
            for n, m, s in zip(self.steps, self.msd, self.stderr)
        ]

    def manifest_config(self):
        return {
            "f": self.f,
            "sigma2": self.sigma2,
            "mode": self.mode.value,
            "n_steps": self.n_steps,
            "n_walkers": self.n_walkers,
        }


def run_walk_ensemble(f, sigma2, mode, n_steps, n_walkers, seed=0,
                      n_blocks=DEFAULT_WALK_BLOCKS, threads=1):
    """Simulate an ensemble of independent correlated walkers.

    Each walker is a fresh sampler sequence; its position after N steps
    is the running sum of the first N outcomes. Walkers are processed
    in blocks, each block on a stream derived from (seed, block index),
    which makes the ensemble deterministic for a given seed at any
    thread count and block aggregation order-independent.

    Returns a :class:`WalkEnsembleResult` with msd and standard errors
    at every N from 0 to n_steps.
    """
    f = float(f)
    sigma2 = float(sigma2)
    n_steps = int(n_steps)
    n_walkers = int(n_walkers)
    _validate_walk_params(f, sigma2, mode)
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if n_walkers < 1:
        raise ValueError("n_walkers must be at least 1")
    n_blocks = max(1, min(int(n_blocks), n_walkers))
    base, extra = divmod(n_walkers, n_blocks)
    sizes = [base + (1 if b < extra else 0) for b in range(n_blocks)]

    def run_block(b):
        stream = derived_stream(seed, PURPOSE_WALK, b)
        x = _block_steps(f, sigma2, mode, sizes[b], n_steps, stream)
        y = np.cumsum(x, axis=1)
        y2 = y * y
        # Per-N first and second moments of y^2 over this block.
        return y2.sum(axis=0), (y2 * y2).sum(axis=0), y2.mean(axis=0)

    if threads and int(threads) > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            per_block = list(pool.map(run_block, range(n_blocks)))
    else:
        per_block = [run_block(b) for b in range(n_blocks)]

    sum_y2 = np.zeros(n_steps + 1)
    sum_y4 = np.zeros(n_steps + 1)
    block_msd = np.zeros((n_blocks, n_steps + 1))
    for b, (s2, s4, bm) in enumerate(per_block):
        sum_y2[1:] += s2
        sum_y4[1:] += s4
        block_msd[b, 1:] = bm

    msd = sum_y2 / n_walkers
    stderr = np.zeros(n_steps + 1)
    if n_walkers > 1:
        var_y2 = (sum_y4 / n_walkers - msd * msd) * (n_walkers / (n_walkers - 1))
        stderr = np.sqrt(np.maximum(var_y2, 0.0) / n_walkers)
    else:
        stderr[:] = np.nan
        stderr[0] = 0.0

    return WalkEnsembleResult(
        f=f, sigma2=sigma2, mode=mode, n_steps=n_steps, n_walkers=n_walkers,
        seed=int(seed), msd=msd, stderr=stderr, block_msd=block_msd,
        block_weights=np.asarray(sizes, dtype=float),
    )


def ar1_msd_closed_form(f, sigma2, mode, n):
    """Exact ensemble mean of y_N^2 for a fresh sequence of the mode.

    For the chain modes this is the classic partial-sum variance of a
    stationary order-1 autoregressive process with marginal variance v
    and lag correlation f^|i-j|,

        v * [ N (1+f)/(1-f) - 2 f (1 - f^N) / (1-f)^2 ],

    which reduces to v N at f = 0. Pair mode has covariance only inside
    a pair, giving N sigma2 + floor(N/2) (2 f + f^2) sigma2 (the second
    member of each pair carries the extra f^2 variance of its shift).

    Accepts a scalar or array of step counts N >= 0.
    """
    f = float(f)
    sigma2 = float(sigma2)
    _validate_walk_params(f, sigma2, mode)
    n_arr = np.asarray(n)
    if not np.all(np.isfinite(np.asarray(n_arr, dtype=float))):
        raise ValueError("step counts must be finite")
    n_int = n_arr.astype(np.int64)
    if np.any(n_int < 0) or np.any(n_int != np.asarray(n_arr, dtype=float)):
        raise ValueError("step counts must be nonnegative integers")

    if mode is SamplerMode.PAIR:
        out = n_int * sigma2 + (n_int // 2) * (2.0 * f + f * f) * sigma2
    elif f == 1.0:
        # Normalized chain only (raw is rejected above): every step
        # repeats the first draw, so y_N = N x_1.
        out = sigma2 * n_int.astype(float) ** 2
    else:
        v = marginal_variance_law(f, sigma2, mode)
        one_minus = 1.0 - f
        out = v * (n_int * (1.0 + f) / one_minus
                   - 2.0 * f * (1.0 - np.power(f, n_int)) / one_minus**2)
    out = np.asarray(out, dtype=float)
    return out if n_arr.ndim else float(out)


def _window_mask(result, window, min_points, positive_msd=False):
    lo, hi = int(window[0]), int(window[1])
    if lo < 0 or hi <= lo or hi > result.n_steps:
        raise ValueError(
            f"fit window [{lo}, {hi}] must lie inside the recorded "
            f"range [0, {result.n_steps}]"
        )
    mask = (result.steps >= lo) & (result.steps <= hi)
    if positive_msd:
        mask &= result.msd > 0.0
    if mask.sum() < min_points:
        raise ValueError(
            f"fit window [{lo}, {hi}] is degenerate: it holds "
            f"{int(mask.sum())} usable points, fewer than {min_points}"
        )
    return mask


def _block_spread(block_values, weights, center):
    """Standard error of a weighted block mean around ``center``.

    Blocks are independent, so the weighted spread of per-block values
    estimates the error of the combined value. Non-finite block values
    (degenerate blocks) are dropped; fewer than two usable blocks give
    NaN.
    """
    vals = np.asarray(block_values, dtype=float)
    w = np.asarray(weights, dtype=float)
    ok = np.isfinite(vals)
    vals, w = vals[ok], w[ok]
    b = vals.size
    if b < 2:
        return float("nan")
    w = w / w.sum()
    return float(np.sqrt(np.sum((w * (vals - center)) ** 2) * b / (b - 1)))


@dataclass(frozen=True)
class LinearMsdFit:
    """Least-squares line msd = c1 N + c0 over a step window.

    Iterates as (c1, c0) so it unpacks directly into the slope and
    intercept.
    """

    c1: float
    c0: float
    c1_stderr: float
    window: tuple
    n_points: int

    def __iter__(self):
        yield self.c1
        yield self.c0


@dataclass(frozen=True)
class GrowthExponentFit:
    """Power-law fit msd = amplitude * N^exponent over a step window.

    Iterates as (exponent, amplitude).
    """

    exponent: float
    amplitude: float
    exponent_stderr: float
    window: tuple
    n_points: int

    def __iter__(self):
        yield self.exponent
        yield self.amplitude


def fit_sqrt_growth(result, window=None):
    """Fit msd linearly in N; the square-root growth law for |y|.

    Ordinary least squares of the recorded msd against step count on
    the closed window (default [1, min(100, n_steps)]), equivalent to
    fitting |y| = sqrt(c1 N + c0). The slope standard error comes from
    the spread of per-block slopes, whose weighted mean is identically
    the full-ensemble slope.
    """
    if window is None:
        window = (1, min(100, result.n_steps))
    mask = _window_mask(result, window, min_points=10)
    n_sel = result.steps[mask].astype(float)
    c1, c0 = np.polyfit(n_sel, result.msd[mask], 1)
    block_slopes = np.polyfit(n_sel, result.block_msd[:, mask].T, 1)[0]
    spread = _block_spread(block_slopes, result.block_weights, float(c1))
    return LinearMsdFit(c1=float(c1), c0=float(c0), c1_stderr=spread,
                        window=(int(window[0]), int(window[1])),
                        n_points=int(mask.sum()))


def loglog_exponent(result, window=None):
    """Growth exponent of msd from a log-log fit over a step window.

    Fits log msd against log N on the closed window (default
    [20, min(100, n_steps)]); a diffusive walk gives exponent 1 (so the
    displacement itself grows with exponent 1/2). Steps with
    nonpositive msd are excluded. The exponent standard error comes
    from the spread of per-block exponents around their weighted mean.
    """
    if window is None:
        window = (20, min(100, result.n_steps))
    if int(window[0]) < 1:
        raise ValueError("log-log window must start at N >= 1")
    mask = _window_mask(result, window, min_points=10, positive_msd=True)
    log_n = np.log(result.steps[mask].astype(float))
    exponent, log_amp = np.polyfit(log_n, np.log(result.msd[mask]), 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        block_log = np.log(result.block_msd[:, mask])
    block_exponents = np.full(result.n_blocks, np.nan)
    finite = np.all(np.isfinite(block_log), axis=1)
    if finite.any():
        block_exponents[finite] = np.polyfit(log_n, block_log[finite].T, 1)[0]
    w = result.block_weights[finite]
    center = float(np.sum(w * block_exponents[finite]) / w.sum()) if finite.any() else float("nan")
    spread = _block_spread(block_exponents, result.block_weights, center)
    return GrowthExponentFit(exponent=float(exponent),
                             amplitude=float(np.exp(log_amp)),
                             exponent_stderr=spread,
                             window=(int(window[0]), int(window[1])),
                             n_points=int(mask.sum()))
