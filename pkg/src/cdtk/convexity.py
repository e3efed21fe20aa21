"""Certification of (K,N)-convexity for scalar functions on an interval.

A smooth S is (K,N)-convex when Hess S - (grad S)^2/N >= K, equivalently
when U_N = exp(-S/N) satisfies the concavity-type bound

    U_N'' <= -(K/N) U_N.                                  (pointwise form)

On a metric interval the normative formulations are integrated:

    U_N(g_t) >= sigma^(1-t)(d) U_N(g_0) + sigma^(t)(d) U_N(g_1)   (sigma form)

    u(g_t) >= (1-t) u(g_0) + t u(g_1)
              + (K/N) d^2 int_0^1 g(t,r) u(g_r) dr               (Green form)

along constant-speed geodesics g (sub-segments of the interval), where
g(t,r) = min{(1-t)r, (1-r)t} is the Green function of [0,1].  All three
checkers report a minimum margin over sampled segments; `passed` means the
margin clears -tol with tol = c1 step^2 + c2 eps scale (central differences
and trapezoid quadrature are both O(step^2)).

Functions are carried as `ScalarFunctionGrid`: samples on a uniform grid,
with +infinity permitted at the boundary nodes only (the 1D model functions
diverge at the ends of their natural domains).  Sub-segments are sampled
node-aligned so that no interpolation error enters the margins.

Model library (maximal domains):

    cos_model(K, N):   S = -N log cos(x sqrt(K/N)),  K > 0
    log_model(N):      S = -N log x,                 K = 0
    sinh_model(K, N):  S = -N log sinh(x sqrt(-K/N)), K < 0
    cosh_model(K, N):  S = -N log cosh(x sqrt(-K/N)), K < 0

The cos model is the equality case: S'' - (S')^2/N = K identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .coeffs import sigma_array

__all__ = [
    "ScalarFunctionGrid",
    "ConvexityReport",
    "u_from_s",
    "check_kn_pointwise",
    "check_kn_sigma",
    "check_kn_green",
    "scale_lemma_transform",
    "sum_lemma_check",
    "cos_model",
    "log_model",
    "sinh_model",
    "cosh_model",
    "margin_tolerance",
]

# tolerance model: margins are compared against -(c1 step^2 + c2 eps) * scale
TOL_STEP2 = 10.0
TOL_EPS = 100.0
_EPS = np.finfo(float).eps


def margin_tolerance(step: float, scale: float = 1.0) -> float:
    return float((TOL_STEP2 * step * step + TOL_EPS * _EPS) * max(scale, 1.0))


@dataclass(frozen=True)
class ScalarFunctionGrid:
    """A real function sampled at n+1 uniform nodes of [lo, hi].

    Values must be finite on interior nodes; +infinity is permitted at the
    two boundary nodes (excluded-domain endpoints of model functions).
    """

    lo: float
    hi: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or len(vals) < 5:
            raise ValueError("grid needs at least 5 nodes (n >= 4)")
        if not self.hi > self.lo:
            raise ValueError("empty domain: hi must exceed lo")
        if np.any(np.isneginf(vals)) or np.any(np.isnan(vals)):
            raise ValueError("grid values must be > -inf and not NaN")
        if np.any(np.isposinf(vals[1:-1])):
            raise ValueError("+inf permitted at boundary nodes only")

    @property
    def n(self) -> int:
        return len(self.values) - 1

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n + 1)

    @classmethod
    def from_callable(cls, f: Callable, lo: float, hi: float, n: int) -> "ScalarFunctionGrid":
        x = np.linspace(lo, hi, n + 1)
        return cls(lo, hi, np.asarray([f(xi) for xi in x], dtype=float))

    def second_difference(self) -> np.ndarray:
        """Central second differences on interior nodes."""
        v, h = self.values, self.step
        return (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)

    def first_difference(self) -> np.ndarray:
        """Central first differences on interior nodes."""
        v, h = self.values, self.step
        return (v[2:] - v[:-2]) / (2.0 * h)

    def _same_domain(self, other: "ScalarFunctionGrid"):
        if (
            abs(self.lo - other.lo) > 1e-12
            or abs(self.hi - other.hi) > 1e-12
            or self.n != other.n
        ):
            raise ValueError("grids must share the same domain and resolution")

    def __add__(self, other: "ScalarFunctionGrid") -> "ScalarFunctionGrid":
        self._same_domain(other)
        return ScalarFunctionGrid(self.lo, self.hi, self.values + other.values)

    def scaled(self, lam: float) -> "ScalarFunctionGrid":
        if lam <= 0:
            raise ValueError("scaling factor must be positive")
        return ScalarFunctionGrid(self.lo, self.hi, lam * self.values)


@dataclass(frozen=True)
class ConvexityReport:
    form: str
    min_margin: float
    argmin: dict = field(default_factory=dict)
    passed: bool = False
    tol: float = 0.0
    n_singular: int = 0
    seed: int | None = None


def u_from_s(s: ScalarFunctionGrid, n_dim: float) -> ScalarFunctionGrid:
    """U_N = exp(-S/N); S = +inf maps to U_N = 0."""
    if n_dim <= 0:
        raise ValueError("dimension parameter N must be positive")
    u = np.where(np.isposinf(s.values), 0.0, np.exp(-s.values / n_dim))
    return ScalarFunctionGrid(s.lo, s.hi, u)


def check_kn_pointwise(s: ScalarFunctionGrid, k: float, n_dim: float) -> ConvexityReport:
    """Finite-difference check of U_N'' <= -(K/N) U_N on interior nodes.

    Offered for smooth grids only; the sigma and Green forms are the
    normative certifiers.
    """
    u = u_from_s(s, n_dim)
    d2 = u.second_difference()
    margins = -(k / n_dim) * u.values[1:-1] - d2
    i = int(np.argmin(margins))
    scale = float(np.max(np.abs(u.values))) if len(u.values) else 1.0
    tol = margin_tolerance(s.step, scale)
    m = float(margins[i])
    return ConvexityReport(
        form="pointwise_hessian",
        min_margin=m,
        argmin={"x": float(u.nodes[i + 1])},
        passed=bool(m >= -tol),
        tol=tol,
    )


def _sample_segments(n: int, samples: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Node-aligned sub-segments; the full domain is always included."""
    segs = [(0, n)]
    for _ in range(samples):
        i = int(rng.integers(0, n - 1))
        j = int(rng.integers(i + 2, n + 1))
        segs.append((i, j))
    return segs


def check_kn_sigma(
    s: ScalarFunctionGrid,
    k: float,
    n_dim: float,
    samples: int = 64,
    seed: int = 0,
    tol: float | None = None,
) -> ConvexityReport:
    """Certify the sigma-interpolation form of (K,N)-convexity.

    Segments with singular coefficients (kappa d^2 >= pi^2) count as passed
    only when U_N vanishes at both endpoints; otherwise they fail outright.
    """
    u = u_from_s(s, n_dim).values
    kappa = k / n_dim
    rng = np.random.default_rng(seed)
    segs = _sample_segments(s.n, samples, rng)
    scale = float(np.max(u))
    if tol is None:
        tol = margin_tolerance(s.step, scale)

    best = math.inf
    argmin: dict = {}
    n_singular = 0
    for (i, j) in segs:
        d = (j - i) * s.step
        t = np.arange(j - i + 1) / (j - i)
        if kappa * d * d >= math.pi**2:
            n_singular += 1
            if u[i] == 0.0 and u[j] == 0.0:
                continue  # 0 * inf convention: inequality holds vacuously
            best = -math.inf
            argmin = {"segment": (float(s.nodes[i]), float(s.nodes[j])), "singular": True}
            continue
        c0, _ = sigma_array(kappa, 1.0 - t, d)
        c1, _ = sigma_array(kappa, t, d)
        margins = u[i : j + 1] - c0 * u[i] - c1 * u[j]
        m = int(np.argmin(margins))
        if margins[m] < best:
            best = float(margins[m])
            argmin = {
                "segment": (float(s.nodes[i]), float(s.nodes[j])),
                "t": float(t[m]),
            }
    return ConvexityReport(
        form="sigma_interpolation",
        min_margin=best,
        argmin=argmin,
        passed=bool(best >= -tol),
        tol=float(tol),
        n_singular=n_singular,
        seed=seed,
    )


def green_kernel(t, r):
    """Green function of the unit interval: g(t,r) = min{(1-t)r, (1-r)t}."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    return np.minimum((1.0 - t) * r, (1.0 - r) * t)


def check_kn_green(
    s: ScalarFunctionGrid,
    k: float,
    n_dim: float,
    samples: int = 64,
    seed: int = 0,
    tol: float | None = None,
) -> ConvexityReport:
    """Certify the Green-function form of (K,N)-convexity.

    The kernel integral is evaluated by trapezoid quadrature on the
    node-aligned t-grid; the kink of g(t, .) at r = t falls on a node, so
    the quadrature stays O(step^2).
    """
    u = u_from_s(s, n_dim).values
    kappa = k / n_dim
    rng = np.random.default_rng(seed)
    segs = _sample_segments(s.n, samples, rng)
    scale = float(np.max(u))
    if tol is None:
        tol = margin_tolerance(s.step, scale)

    best = math.inf
    argmin: dict = {}
    for (i, j) in segs:
        m_seg = j - i
        d = m_seg * s.step
        t = np.arange(m_seg + 1) / m_seg
        useg = u[i : j + 1]
        w = np.full(m_seg + 1, 1.0 / m_seg)
        w[0] *= 0.5
        w[-1] *= 0.5
        kernel = green_kernel(t[:, None], t[None, :])  # (t, r)
        integral = kernel @ (useg * w)
        margins = useg - (1.0 - t) * useg[0] - t * useg[-1] - kappa * d * d * integral
        mloc = int(np.argmin(margins))
        if margins[mloc] < best:
            best = float(margins[mloc])
            argmin = {
                "segment": (float(s.nodes[i]), float(s.nodes[j])),
                "t": float(t[mloc]),
            }
    return ConvexityReport(
        form="green_function",
        min_margin=best,
        argmin=argmin,
        passed=bool(best >= -tol),
        tol=float(tol),
        seed=seed,
    )


class ScaledConvexity(NamedTuple):
    function: ScalarFunctionGrid
    k_map: Callable[[float], float]
    n_map: Callable[[float], float]


def scale_lemma_transform(s: ScalarFunctionGrid, lam: float) -> ScaledConvexity:
    """lambda S is (lambda K, lambda N)-convex: return the scaled function
    and the parameter maps."""
    return ScaledConvexity(s.scaled(lam), lambda k: lam * k, lambda n: lam * n)


def sum_lemma_check(
    s1: ScalarFunctionGrid,
    s2: ScalarFunctionGrid,
    k1: float,
    k2: float,
    n1: float,
    n2: float,
    samples: int = 64,
    seed: int = 0,
) -> ConvexityReport:
    """S1 + S2 is (K1+K2, N1+N2)-convex: run the sigma certifier on the sum."""
    return check_kn_sigma(s1 + s2, k1 + k2, n1 + n2, samples=samples, seed=seed)


def _model_grid(lo, hi, n, f, inf_left=False, inf_right=False) -> ScalarFunctionGrid:
    x = np.linspace(lo, hi, n + 1)
    v = f(x)
    if inf_left:
        v[0] = np.inf
    if inf_right:
        v[-1] = np.inf
    return ScalarFunctionGrid(lo, hi, v)


def cos_model(k: float, n_dim: float, n: int = 1024) -> ScalarFunctionGrid:
    """S = -N log cos(x sqrt(K/N)) on its maximal domain, K > 0."""
    if k <= 0 or n_dim <= 0:
        raise ValueError("cos model requires K > 0 and N > 0")
    a = math.sqrt(k / n_dim)
    half = 0.5 * math.pi / a
    with np.errstate(divide="ignore"):
        return _model_grid(
            -half, half, n,
            lambda x: -n_dim * np.log(np.maximum(np.cos(a * x), 0.0)),
            inf_left=True, inf_right=True,
        )


def log_model(n_dim: float, hi: float = 1.0, n: int = 1024) -> ScalarFunctionGrid:
    """S = -N log x on (0, hi], (0, N)-convex; S(0) = +inf."""
    if n_dim <= 0 or hi <= 0:
        raise ValueError("log model requires N > 0 and hi > 0")
    with np.errstate(divide="ignore"):
        return _model_grid(0.0, hi, n, lambda x: -n_dim * np.log(np.maximum(x, 0.0)), inf_left=True)


def sinh_model(k: float, n_dim: float, hi: float = 2.0, n: int = 1024) -> ScalarFunctionGrid:
    """S = -N log sinh(x sqrt(-K/N)) on (0, hi], K < 0; S(0) = +inf."""
    if k >= 0 or n_dim <= 0:
        raise ValueError("sinh model requires K < 0 and N > 0")
    a = math.sqrt(-k / n_dim)
    with np.errstate(divide="ignore"):
        return _model_grid(
            0.0, hi, n,
            lambda x: -n_dim * np.log(np.maximum(np.sinh(a * x), 0.0)),
            inf_left=True,
        )


def cosh_model(k: float, n_dim: float, half_width: float = 2.0, n: int = 1024) -> ScalarFunctionGrid:
    """S = -N log cosh(x sqrt(-K/N)) on [-half_width, half_width], K < 0."""
    if k >= 0 or n_dim <= 0:
        raise ValueError("cosh model requires K < 0 and N > 0")
    a = math.sqrt(-k / n_dim)
    return _model_grid(-half_width, half_width, n, lambda x: -n_dim * np.log(np.cosh(a * x)))
