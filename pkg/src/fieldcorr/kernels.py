"""Analytic correlation kernels for time-separated field measurements.

Three closed-form correlation functions are provided, all expressed in
units of the measurement averaging width (tau = 1), all even in the
time separation t0:

* scalar Lorentzian: the vacuum correlation of a massless scalar field
  time-averaged with a Lorentzian window,
  C(t0) = (4 - t0^2) / (4 pi^2 (t0^2 + 4)^2);
* unit-variance quartic: the common unit-variance form shared by fields
  whose vacuum correlator falls off as the inverse fourth power of the
  time separation (electromagnetic-type fields),
  K(t0) = (1 - 6 t0^2 + t0^4) / (1 + t0^2)^4;
* squeezed cosine: a single occupied mode of wavenumber k in a squeezed
  state, C1(t0) = cos(k t0).
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import NonIntegrableKernelError

FOUR_PI_SQ = 4.0 * math.pi**2

#: Default number of uniform scan subdivisions used to bracket roots.
ROOT_SCAN_SUBDIVISIONS = 10_000

#: Relative tolerance to which bracketed roots are refined.
ROOT_REL_TOL = 1e-12


class KernelKind(enum.Enum):
    SCALAR_LORENTZIAN = "scalar"
    UNIT_VARIANCE_QUARTIC = "em"
    SQUEEZED_COSINE = "squeezed"


def _check_finite(t0):
    arr = np.asarray(t0, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("time separation must be finite")
    return arr if arr.ndim else float(arr)


def eval_scalar(t0):
    """Lorentzian-averaged massless scalar vacuum correlation at separation t0.

    Accepts a scalar or array; even in t0; value at 0 is 1/(16 pi^2).
    """
    t0 = _check_finite(t0)
    t2 = t0 * t0
    return (4.0 - t2) / (FOUR_PI_SQ * (t2 + 4.0) ** 2)


def eval_unit_quartic(t0):
    """Unit-variance correlation of inverse-quartic (electromagnetic-type) fields.

    Accepts a scalar or array; even in t0; value at 0 is exactly 1.
    """
    t0 = _check_finite(t0)
    t2 = t0 * t0
    return (1.0 - 6.0 * t2 + t2 * t2) / (1.0 + t2) ** 4


def eval_squeezed(t0, k):
    """Single-mode squeezed-bath correlation cos(k t0) for wavenumber k > 0."""
    if not (np.isfinite(k) and k > 0.0):
        raise ValueError("wavenumber k must be positive and finite")
    t0 = _check_finite(t0)
    return np.cos(k * t0)


@dataclass(frozen=True)
class CorrelationKernel:
    """An analytic correlation function together with its structural facts.

    Attributes
    ----------
    kind : KernelKind
        Which closed form this kernel evaluates.
    variance : float
        The correlation at zero separation, identically eval(0).
    wavenumber_k : float or None
        Mode wavenumber, used only by the squeezed cosine kernel.
    kappa : float or None
        Case-dependent normalization constant of the unscaled
        inverse-quartic correlator. Metadata only; the unit-variance
        rescaling removes it from every evaluation.
    """

    kind: KernelKind
    variance: float
    wavenumber_k: float = None
    kappa: float = None

    def eval(self, t0):
        """Evaluate the kernel at separation t0 (scalar or array)."""
        if self.kind is KernelKind.SCALAR_LORENTZIAN:
            return eval_scalar(t0)
        if self.kind is KernelKind.UNIT_VARIANCE_QUARTIC:
            return eval_unit_quartic(t0)
        return eval_squeezed(t0, self.wavenumber_k)

    @property
    def label(self):
        return self.kind.value


def scalar_lorentzian():
    """Kernel for the Lorentzian-averaged massless scalar field."""
    return CorrelationKernel(
        kind=KernelKind.SCALAR_LORENTZIAN, variance=1.0 / (16.0 * math.pi**2)
    )


def unit_variance_quartic(kappa=None):
    """Unit-variance kernel of electromagnetic-type fields.

    ``kappa`` optionally records the normalization constant of the
    specific field; it never enters evaluation.
    """
    if kappa is not None and not (np.isfinite(kappa) and kappa > 0.0):
        raise ValueError("kappa must be positive when given")
    return CorrelationKernel(
        kind=KernelKind.UNIT_VARIANCE_QUARTIC, variance=1.0, kappa=kappa
    )


def squeezed_cosine(k):
    """Kernel for a single-mode squeezed bath with wavenumber k > 0."""
    if not (np.isfinite(k) and k > 0.0):
        raise ValueError("wavenumber k must be positive and finite")
    return CorrelationKernel(
        kind=KernelKind.SQUEEZED_COSINE, variance=1.0, wavenumber_k=float(k)
    )


def kernel_by_name(name, k=None):
    """Construct a kernel from its command-line name (scalar, em, squeezed)."""
    if name == "scalar":
        return scalar_lorentzian()
    if name == "em":
        return unit_variance_quartic()
    if name == "squeezed":
        if k is None:
            raise ValueError("squeezed kernel requires a wavenumber k")
        return squeezed_cosine(k)
    raise ValueError(f"unknown kernel name: {name!r}")


def zero_crossings(kernel, interval, subdivisions=ROOT_SCAN_SUBDIVISIONS):
    """All roots of the kernel inside a finite interval, sorted ascending.

    A uniform scan brackets sign changes; each bracket is refined by
    bisection to relative tolerance ``ROOT_REL_TOL``. The kernels are
    smooth with well-separated simple roots, so the scan cannot miss a
    crossing at the default resolution.

    Parameters
    ----------
    kernel : CorrelationKernel
    interval : (float, float)
        Finite, ordered search interval.
    subdivisions : int
        Number of uniform scan cells.

    Returns
    -------
    list of float
        Roots in ascending order; empty if the kernel has none there.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("search interval must be finite")
    if not lo < hi:
        raise ValueError("search interval must be ordered")

    grid = np.linspace(lo, hi, subdivisions + 1)
    values = np.asarray(kernel.eval(grid), dtype=float)

    roots = [float(g) for g, v in zip(grid, values) if v == 0.0]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa == 0.0 or fb == 0.0 or fa * fb > 0.0:
            continue
        roots.append(_bisect(kernel.eval, float(a), float(b), float(fa)))

    roots.sort()
    deduped = []
    for r in roots:
        if not deduped or abs(r - deduped[-1]) > ROOT_REL_TOL * max(1.0, abs(r)):
            deduped.append(r)
    return deduped


def _bisect(func, a, b, fa):
    while b - a > ROOT_REL_TOL * max(1.0, abs(a), abs(b)):
        mid = 0.5 * (a + b)
        fm = float(func(mid))
        if fm == 0.0:
            return mid
        if fa * fm < 0.0:
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def integral_to_infinity(kernel, abs_tol=1e-13):
    """Integral of the kernel over [0, inf) by adaptive quadrature.

    The half line is mapped to [0, 1) by t0 = u / (1 - u), which keeps
    the transformed integrand bounded because both integrable kernels
    decay at least as fast as the inverse square of t0. The squeezed
    cosine has no improper Riemann integral and is rejected.

    Returns
    -------
    (value, error_bound) : (float, float)
    """
    if kernel.kind is KernelKind.SQUEEZED_COSINE:
        raise NonIntegrableKernelError(
            "the cosine kernel has no improper integral over [0, inf)"
        )

    def transformed(u):
        w = 1.0 - u
        return kernel.eval(u / w) / (w * w)

    value, bound = quad(transformed, 0.0, 1.0, epsabs=abs_tol, epsrel=0.0, limit=200)
    return value, bound
