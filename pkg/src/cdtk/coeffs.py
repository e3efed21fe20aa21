"""Comparison coefficients of curvature-dimension analysis.

Every certifier in this package is an inequality between values of a few
elementary comparison functions, indexed by a curvature ratio kappa = K/N:

    s_k(t)     = sin(sqrt(k) t)/sqrt(k)      (k > 0)
                 t                           (k = 0)
                 sinh(sqrt(-k) t)/sqrt(-k)   (k < 0)

    c_k(t)     = cos(sqrt(k) t)              (k >= 0)
                 cosh(sqrt(-k) t)            (k < 0)

    sigma_k^(t)(theta) = s_k(t theta)/s_k(theta)   for 0 < k theta^2 < pi^2,
                         t                         for k theta^2 = 0,
                         +infinity                 for k theta^2 >= pi^2,

    e_k(t)     = int_0^t exp(k s) ds = (exp(k t) - 1)/k.

The sigma coefficients interpolate boundary data along geodesics; the
singular regime k theta^2 >= pi^2 is represented by a *tagged* sentinel
(`ExtendedReal.inf()`), never by a floating-point infinity, so that
downstream checkers can report "singular regime" distinctly from overflow.

Useful identities, exercised by the test suite:

    (2/N) s_{K/N}(theta/2)^2 = (1/K)(1 - c_{K/N}(theta))      (sc half-angle)
    c_{K/N}(theta)^2 + (K/N) s_{K/N}(theta)^2 = 1             (Pythagorean)
    sigma_k^(0) = 0,  sigma_k^(1) = 1,  sigma nondecreasing in k,
    sigma_k^(t)(theta) = t + k (t - t^3) theta^2 / 6 + O(k^2 theta^4).

All scalar functions also accept numpy arrays (broadcasting elementwise);
`sigma_array` is the vector companion of `sigma` and returns a singular
mask alongside the values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExtendedReal",
    "s_kappa",
    "c_kappa",
    "sigma",
    "sigma_array",
    "e_kappa",
    "g_interp",
]

_PI2 = math.pi**2

# below this threshold the sigma ratio is evaluated by its Taylor series in
# z = kappa theta^2; the ratio branch is 0/0-degenerate as theta -> 0
_SIGMA_SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class ExtendedReal:
    """A real number or the +infinity sentinel of the singular sigma regime.

    +infinity absorbs addition and multiplication by positive reals and
    compares as maximal.  The tag is deliberate: a tagged infinity produced
    by ``sigma`` means "coefficient singular", which downstream certifiers
    must treat differently from an overflowing float.
    """

    value: float
    infinite: bool = False

    @classmethod
    def inf(cls) -> "ExtendedReal":
        return cls(math.inf, True)

    @property
    def is_infinite(self) -> bool:
        return self.infinite

    def __float__(self) -> float:
        return math.inf if self.infinite else self.value

    def __add__(self, other):
        if isinstance(other, ExtendedReal):
            if self.infinite or other.infinite:
                return ExtendedReal.inf()
            return ExtendedReal(self.value + other.value)
        if self.infinite:
            return ExtendedReal.inf()
        return ExtendedReal(self.value + float(other))

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, ExtendedReal):
            if self.infinite or other.infinite:
                if float(self) <= 0 or float(other) <= 0:
                    raise ValueError("infinite sentinel only absorbs positive factors")
                return ExtendedReal.inf()
            return ExtendedReal(self.value * other.value)
        c = float(other)
        if self.infinite:
            if c <= 0:
                raise ValueError("infinite sentinel only absorbs positive factors")
            return ExtendedReal.inf()
        return ExtendedReal(self.value * c)

    __rmul__ = __mul__

    def _cmp_value(self) -> float:
        return math.inf if self.infinite else self.value

    def __lt__(self, other) -> bool:
        o = other._cmp_value() if isinstance(other, ExtendedReal) else float(other)
        return self._cmp_value() < o

    def __le__(self, other) -> bool:
        o = other._cmp_value() if isinstance(other, ExtendedReal) else float(other)
        return self._cmp_value() <= o

    def __gt__(self, other) -> bool:
        return not self.__le__(other)

    def __ge__(self, other) -> bool:
        return not self.__lt__(other)


def _sinhc(x):
    """sinh(x)/x, stable at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    out = np.where(small, 1.0 + x * x / 6.0 * (1.0 + x * x / 20.0), np.sinh(xs) / xs)
    return out


def s_kappa(kappa: float, theta):
    """The comparison sine s_kappa(theta); continuous in kappa at 0."""
    theta = np.asarray(theta, dtype=float)
    if kappa > 0:
        x = math.sqrt(kappa) * theta
        # theta * sinc is sin(x)/sqrt(kappa) without a 0/0 at theta = 0
        out = theta * np.sinc(x / math.pi)
    elif kappa < 0:
        x = math.sqrt(-kappa) * theta
        out = theta * _sinhc(x)
    else:
        out = theta.copy()
    return float(out) if out.ndim == 0 else out


def c_kappa(kappa: float, theta):
    """The comparison cosine c_kappa(theta)."""
    theta = np.asarray(theta, dtype=float)
    if kappa >= 0:
        out = np.cos(math.sqrt(kappa) * theta)
    else:
        out = np.cosh(math.sqrt(-kappa) * theta)
    return float(out) if out.ndim == 0 else out


def _sigma_series(t, z):
    """Taylor expansion of sigma in z = kappa theta^2, valid for |z| << 1."""
    c1 = t * (1.0 - t * t) / 6.0
    c2 = t * ((t**4 - 1.0) / 120.0 + (1.0 - t * t) / 36.0)
    return t + z * (c1 + z * c2)


def sigma(kappa: float, t: float, theta: float) -> ExtendedReal:
    """Distortion coefficient sigma_kappa^(t)(theta).

    Returns the tagged +infinity sentinel once kappa theta^2 >= pi^2.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation parameter t={t} outside [0, 1]")
    if theta < 0:
        raise ValueError(f"distance theta={theta} must be nonnegative")
    z = kappa * theta * theta
    if z >= _PI2:
        return ExtendedReal.inf()
    if abs(z) < _SIGMA_SERIES_CUTOFF:
        return ExtendedReal(_sigma_series(t, z))
    return ExtendedReal(s_kappa(kappa, t * theta) / s_kappa(kappa, theta))


def sigma_array(kappa: float, t, theta):
    """Vectorized sigma: returns (values, singular_mask).

    Values are np.inf where the mask is set; the mask is authoritative
    (it tags the singular regime kappa theta^2 >= pi^2).
    """
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    t, theta = np.broadcast_arrays(t, theta)
    z = kappa * theta * theta
    singular = z >= _PI2
    series = np.abs(z) < _SIGMA_SERIES_CUTOFF
    out = np.empty_like(z)
    out[series] = _sigma_series(t[series], z[series])
    ratio = ~series & ~singular
    if np.any(ratio):
        out[ratio] = s_kappa(kappa, t[ratio] * theta[ratio]) / s_kappa(kappa, theta[ratio])
    out[singular] = np.inf
    return out, singular


def e_kappa(kappa: float, t):
    """e_kappa(t) = int_0^t exp(kappa s) ds, stable as kappa -> 0."""
    t = np.asarray(t, dtype=float)
    if kappa == 0.0:
        out = t.copy()
    else:
        # expm1 avoids the cancellation of exp(kappa t) - 1 for small kappa t
        out = np.expm1(kappa * t) / kappa
    return float(out) if out.ndim == 0 else out


def g_interp(t: float, x: float, y: float, kappa: float) -> float:
    """Log-interpolation G_t(x, y, kappa) = log(sigma^(1-t)(1) e^x + sigma^(t)(1) e^y).

    Jointly convex on R x R x (-inf, pi^2); monotone nondecreasing in x and y.
    Raises for kappa >= pi^2 where the coefficients are singular.
    """
    if kappa >= _PI2:
        raise ValueError(f"kappa={kappa} >= pi^2: sigma coefficients singular")
    a = sigma(kappa, 1.0 - t, 1.0).value
    b = sigma(kappa, t, 1.0).value
    # log-sum-exp with weights; a or b may be exactly 0 at t in {0, 1}
    m = max(x if a > 0 else -math.inf, y if b > 0 else -math.inf)
    return m + math.log(a * math.exp(x - m) + b * math.exp(y - m))
