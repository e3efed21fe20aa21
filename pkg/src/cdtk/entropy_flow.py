"""Entropy functionals and the entropic curvature-dimension certifier.

For a probability density rho with respect to the reference measure m,

    Ent(mu)  = int rho log rho dm          (0 log 0 = 0)
    U_N(mu)  = exp(-Ent(mu)/N)
    I(mu)    = 4 int ((sqrt(rho))')^2 dm   (Fisher information)

The entropic curvature-dimension condition at (K, N) asks that along
every displacement interpolation (mu_t),

    U_N(mu_t) >= sigma^{(1-t)}(W2) U_N(mu_0) + sigma^{(t)}(W2) U_N(mu_1),

with the equivalent Green-function form

    U_N(mu_r) >= (1-r) U_N(mu_0) + r U_N(mu_1)
                 + (K/N) W2^2 int_0^1 g(s,r) U_N(mu_s) ds.

Entropies along the interpolation are evaluated in quantile space: with
Q_t = (1-t) Q_0 + t Q_1 the monotone interpolation map and p_t the
transported Lebesgue density,

    Ent(mu_t) = int_0^1 [ -log((1-t)/p_0(Q_0) + t/p_1(Q_1)) - log w(Q_t) ] du,

where w = e^{-V} is the Lebesgue density of m.  This is the exact
pushforward formula and avoids the O(1/n) re-binning bias.

Dimensional functional inequalities certified downstream of the CD
condition (m a probability, K > 0 where stated):

    N-HWI:        U_N(mu_1)/U_N(mu_0) <= c(W2) + s(W2) sqrt(I(mu_0))/N
    N-LSI:        K N [exp(2 Ent/N) - 1] <= I(mu)
    N-Talagrand:  W2(mu, m) <= sqrt(N/K) pi/2  and
                  Ent(mu) >= -N log cos(sqrt(K/N) W2(mu, m))
    T-from-LSI:   W2(mu, m) <= sqrt((N/K)[exp(2 Ent/N) - 1])

All margins are (favorable side) - (other side), so pass means >= -tol.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .coeffs import c_kappa, s_kappa, sigma_array
from .convexity import green_kernel
from .metric_measure import DiscreteMMS, WeightedInterval
from .transport import DensityVector, MonotoneInterpolation, node_masses, uniform_density

__all__ = [
    "EntropyValue",
    "entropy",
    "fisher_information",
    "CdeReport",
    "check_cde",
    "check_green_cde",
    "check_nhwi",
    "check_nlsi",
    "TalagrandReport",
    "check_ntalagrand",
    "check_talagrand_from_lsi",
    "seeded_density_pairs",
    "save_density_family",
    "load_density_family",
]

DEFAULT_TOL = 5e-4
_CLAMP = 1e-300


@dataclass(frozen=True)
class EntropyValue:
    """Relative entropy and the induced U_N = exp(-Ent/N)."""

    ent: float
    u_n: float

    @classmethod
    def from_entropy(cls, ent: float, n_dim: float) -> "EntropyValue":
        return cls(ent, 0.0 if math.isinf(ent) else math.exp(-ent / n_dim))


def entropy(space, mu: DensityVector, n_dim: float = 1.0) -> EntropyValue:
    """Ent(mu) = sum rho log rho weights, with 0 log 0 = 0."""
    w = node_masses(space)
    rho = np.where(mu.rho < _CLAMP, 0.0, mu.rho)
    terms = np.where(rho > 0, rho * np.log(np.maximum(rho, _CLAMP)), 0.0)
    return EntropyValue.from_entropy(float(terms @ w), n_dim)


def fisher_information(space: WeightedInterval, mu: DensityVector) -> float:
    """I(mu) = 4 int ((sqrt(rho))')^2 dm by central differences."""
    s = np.sqrt(np.maximum(mu.rho, 0.0))
    ds = np.gradient(s, space.step)
    return float(4.0 * (ds**2) @ node_masses(space))


def _interpolation_entropies(
    space: WeightedInterval,
    mu0: DensityVector,
    mu1: DensityVector,
    t_grid: np.ndarray,
    n_quad: int,
):
    """(W2, Ent(mu_t) for t in t_grid) in the quantile-space model."""
    interp = MonotoneInterpolation(space, mu0, mu1, n_quad=n_quad)
    w2 = math.sqrt(interp.w2sq())
    wq0 = 1.0 / interp.p0q  # cached reciprocals of transported densities
    wq1 = 1.0 / interp.p1q
    ents = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        jac = (1.0 - t) * wq0 + t * wq1
        qt = interp.position(float(t))
        wall = np.maximum(space.weight_at(qt), _CLAMP)
        ents[i] = float(np.mean(-np.log(jac) - np.log(wall)))
    return w2, ents


@dataclass(frozen=True)
class CdeReport:
    t_grid: np.ndarray
    margins: np.ndarray
    w2: float
    u_values: np.ndarray
    min_margin: float
    passed: bool
    tol: float
    singular: bool = False


def check_cde(
    space: WeightedInterval,
    mu0: DensityVector,
    mu1: DensityVector,
    k: float,
    n_dim: float,
    t_grid=None,
    tol: float = DEFAULT_TOL,
    n_quad: int = 4096,
) -> CdeReport:
    """Margins of the sigma-form entropy convexity along the displacement
    interpolation.  A singular sigma regime (K W2^2/N >= pi^2) is reported
    distinctly; it passes only if both endpoint entropies are infinite."""
    t = np.linspace(0.0, 1.0, 21) if t_grid is None else np.asarray(t_grid, dtype=float)
    # endpoint entropies are always needed for the right-hand side
    t_eval = np.concatenate([[0.0], t, [1.0]])
    w2, ents = _interpolation_entropies(space, mu0, mu1, t_eval, n_quad)
    u_all = np.exp(-ents / n_dim)
    u0, u1 = u_all[0], u_all[-1]
    u = u_all[1:-1]
    kappa = k / n_dim
    c0, sing0 = sigma_array(kappa, 1.0 - t, w2)
    c1, sing1 = sigma_array(kappa, t, w2)
    singular = bool(np.any(sing0 | sing1))
    if singular:
        vacuous = u0 == 0.0 and u1 == 0.0
        margins = np.full_like(t, 0.0 if vacuous else -np.inf)
    else:
        margins = u - c0 * u0 - c1 * u1
    m = float(np.min(margins))
    return CdeReport(t, margins, w2, u, m, m >= -tol, tol, singular)


def check_green_cde(
    space: WeightedInterval,
    mu0: DensityVector,
    mu1: DensityVector,
    k: float,
    n_dim: float,
    t_grid=None,
    tol: float = DEFAULT_TOL,
    n_quad: int = 4096,
) -> CdeReport:
    """Margins of the Green-function form along the same interpolation.

    The kernel integral runs over the (uniform) t_grid by trapezoid rule;
    |rho_dot|^2 is W2(mu0, mu1)^2.
    """
    t = np.linspace(0.0, 1.0, 21) if t_grid is None else np.asarray(t_grid, dtype=float)
    if abs(t[0]) > 1e-12 or abs(t[-1] - 1.0) > 1e-12:
        raise ValueError("Green form needs a t-grid spanning [0, 1]")
    w2, ents = _interpolation_entropies(space, mu0, mu1, t, n_quad)
    u = np.exp(-ents / n_dim)
    w = np.gradient(t)  # trapezoid weights for a (possibly nonuniform) grid
    kernel = green_kernel(t[:, None], t[None, :])
    integral = kernel @ (u * w)
    margins = u - (1.0 - t) * u[0] - t * u[-1] - (k / n_dim) * w2 * w2 * integral
    m = float(np.min(margins))
    return CdeReport(t, margins, w2, u, m, m >= -tol, tol)


def _require_probability_measure(space):
    mass = space.mass if isinstance(space, WeightedInterval) else float(np.sum(space.weights))
    if abs(mass - 1.0) > 1e-8:
        raise ValueError(
            f"reference measure must be a probability (mass = {mass:.6g}); "
            "use WeightedInterval.normalized()"
        )


def check_nhwi(
    space: WeightedInterval,
    mu0: DensityVector,
    mu1: DensityVector,
    k: float,
    n_dim: float,
    n_quad: int = 4096,
) -> float:
    """Margin of the N-HWI inequality (RHS - LHS >= -tol to pass)."""
    kappa = k / n_dim
    w2 = math.sqrt(MonotoneInterpolation(space, mu0, mu1, n_quad=n_quad).w2sq())
    i0 = fisher_information(space, mu0)
    if not math.isfinite(i0):
        raise ValueError("N-HWI needs finite Fisher information at mu0")
    e0 = entropy(space, mu0, n_dim)
    e1 = entropy(space, mu1, n_dim)
    rhs = c_kappa(kappa, w2) + s_kappa(kappa, w2) * math.sqrt(i0) / n_dim
    return rhs - e1.u_n / e0.u_n


def check_nlsi(space: WeightedInterval, mu: DensityVector, k: float, n_dim: float) -> float:
    """Margin of the N-LogSobolev inequality I(mu) - KN[exp(2 Ent/N) - 1]."""
    if k <= 0:
        raise ValueError("N-LSI requires K > 0")
    _require_probability_measure(space)
    ent = entropy(space, mu, n_dim).ent
    return fisher_information(space, mu) - k * n_dim * math.expm1(2.0 * ent / n_dim)


@dataclass(frozen=True)
class TalagrandReport:
    w2: float
    diam_margin: float
    ent_margin: float
    w2_margin: float
    weak_margin: float
    passed: bool


def check_ntalagrand(
    space: WeightedInterval, mu: DensityVector, k: float, n_dim: float, tol: float = DEFAULT_TOL
) -> TalagrandReport:
    """Margins of the N-Talagrand inequality.

    diam_margin:  sqrt(N/K) pi/2 - W2(mu, m)
    ent_margin:   Ent(mu) + N log cos(sqrt(K/N) W2)
    w2_margin:    sqrt(N/K) arccos(U_N(mu)) - W2   (same bound in distance units)
    weak_margin:  -N log cos(...) - (K/2) W2^2     (the noted weaker lower bound)
    """
    if k <= 0:
        raise ValueError("N-Talagrand requires K > 0")
    _require_probability_measure(space)
    w2 = math.sqrt(MonotoneInterpolation(space, mu, uniform_density(space)).w2sq())
    ev = entropy(space, mu, n_dim)
    arg = math.sqrt(k / n_dim) * w2
    diam_margin = math.sqrt(n_dim / k) * math.pi / 2.0 - w2
    if arg < math.pi / 2.0:
        rhs = -n_dim * math.log(math.cos(arg))
        ent_margin = ev.ent - rhs
        weak_margin = rhs - 0.5 * k * w2 * w2
    else:
        ent_margin = -math.inf
        weak_margin = -math.inf
    w2_margin = math.sqrt(n_dim / k) * math.acos(min(max(ev.u_n, 0.0), 1.0)) - w2
    passed = diam_margin >= -tol and ent_margin >= -tol
    return TalagrandReport(w2, diam_margin, ent_margin, w2_margin, weak_margin, passed)


def check_talagrand_from_lsi(
    space: WeightedInterval, mu: DensityVector, k: float, n_dim: float
) -> float:
    """Margin of the LSI-derived Talagrand bound
    sqrt((N/K)[exp(2 Ent/N) - 1]) - W2(mu, m)."""
    if k <= 0:
        raise ValueError("requires K > 0")
    _require_probability_measure(space)
    ent = entropy(space, mu, n_dim).ent
    w2 = math.sqrt(MonotoneInterpolation(space, mu, uniform_density(space)).w2sq())
    return math.sqrt(n_dim / k * math.expm1(2.0 * ent / n_dim)) - w2


def seeded_density_pairs(space: WeightedInterval, count: int = 20, seed: int = 0):
    """Reproducible family of smooth, well-separated density pairs.

    Each density is a bump at a side-dependent random center times a mild
    trigonometric perturbation of the reference weight, floored away from
    zero; pairs are pushed to opposite halves of the interval so that the
    transport distance is substantial.
    """
    rng = np.random.default_rng(seed)
    x = space.nodes
    width = space.hi - space.lo
    mid = 0.5 * (space.lo + space.hi)

    def bump(side: int):
        a = rng.uniform(-1.0, 1.0, size=3)
        c = mid + side * rng.uniform(0.16, 0.35) * width
        u = (x - mid) / width * 2.0 * math.pi
        pert = 1.0 + 0.25 * (a[0] * np.sin(u) + a[1] * np.cos(u) + a[2] * np.sin(2.0 * u))
        vals = np.exp(-8.0 * ((x - c) / width) ** 2) * np.maximum(pert, 0.3)
        return DensityVector(np.maximum(vals, 1e-4), 1.0)

    pairs = []
    for _ in range(count):
        mu0 = bump(-1)
        mu1 = bump(+1)
        # renormalize against the space measure
        w = node_masses(space)
        pairs.append(
            (
                DensityVector(mu0.rho / float(mu0.rho @ w)),
                DensityVector(mu1.rho / float(mu1.rho @ w)),
            )
        )
    return pairs


def save_density_family(path: str, space, densities) -> None:
    """CSV with the grid in the header row, one density per row."""
    nodes = space.nodes if isinstance(space, WeightedInterval) else np.arange(space.n)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([repr(float(x)) for x in nodes])
        for mu in densities:
            writer.writerow([repr(float(v)) for v in mu.rho])


def load_density_family(path: str):
    """Returns (nodes, list of raw density value arrays)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if len(rows) < 2:
        raise ValueError("density family CSV needs a grid header and at least one row")
    nodes = np.array([float(v) for v in rows[0]])
    values = [np.array([float(v) for v in row]) for row in rows[1:]]
    for v in values:
        if len(v) != len(nodes):
            raise ValueError("density row length does not match the grid header")
    return nodes, values
