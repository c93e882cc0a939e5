"""Sine and cosine integral functions used by the dipole impedance formulas.

Si(x) = int_0^x sin(t)/t dt
Ci(x) = gamma + ln(x) + int_0^x (cos(t) - 1)/t dt   (x > 0)

Backed by scipy's Cephes implementation, which is accurate to well below the
1e-12 absolute tolerance required here; the test suite cross-checks both
functions against an arbitrary-precision oracle.
"""

import numpy as np
from scipy.special import sici

__all__ = ["sine_integral", "cosine_integral"]


def sine_integral(x):
    """Si(x) for x >= 0. Accepts a scalar or array, raises on non-finite input."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("sine_integral: input must be finite")
    if np.any(arr < 0.0):
        raise ValueError("sine_integral: input must be nonnegative")
    si = sici(arr)[0]
    return float(si) if np.isscalar(x) or arr.ndim == 0 else si


def cosine_integral(x):
    """Ci(x) for x > 0. Accepts a scalar or array; x <= 0 is a domain error."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("cosine_integral: input must be finite")
    if np.any(arr <= 0.0):
        raise ValueError("cosine_integral: log singularity at 0, need x > 0")
    ci = sici(arr)[1]
    return float(ci) if np.isscalar(x) or arr.ndim == 0 else ci
