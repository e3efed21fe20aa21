"""Finite metric measure spaces and their comparison-geometry certifiers.

Two desk-scale carriers:

  * `DiscreteMMS` -- n points, a symmetric distance matrix obeying the
    triangle inequality, and positive weights (the measure).  Discrete
    spaces are not length spaces, so they carry no geodesics; they feed the
    transport and Gamma-calculus modules.

  * `WeightedInterval` -- an interval [lo, hi] with measure dm = e^{-V} dx,
    V sampled on a uniform grid.  This is the home of every geodesic-based
    certifier, and of the sharp 1D model space

        ([-pi/2 sqrt((N-1)/K), +pi/2 sqrt((N-1)/K)],  |x-y|,
         cos(x sqrt(K/(N-1)))^{N-1} dx),

    the equality case of the curvature-dimension machinery at (K, N).

Certified consequences of a curvature-dimension bound (margins are
LHS - RHS of the respective inequality; pass means margin >= -tol):

  Bishop-Gromov:   v(r)/v(R) >= int_0^r s_{K/N}^N / int_0^R s_{K/N}^N
  Bonnet-Myers:    diam(supp m) <= pi sqrt(N/K)           (K > 0)
  Brunn-Minkowski: m(A_t)^{1/N} >= sigma^{(1-t)}(Theta) m(A_0)^{1/N}
                                  + sigma^{(t)}(Theta) m(A_1)^{1/N}

with Theta the min (K >= 0) resp. max (K < 0) distance between A_0, A_1.
Measure integrals are exact for the piecewise-linear interpolant of the
weight, so they are interval-additive and O(step^2) accurate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .coeffs import s_kappa, sigma
from .convexity import ScalarFunctionGrid

__all__ = [
    "DiscreteMMS",
    "WeightedInterval",
    "GeodesicSample",
    "validate_mms",
    "ball_volume",
    "check_bishop_gromov",
    "check_bonnet_myers",
    "check_brunn_minkowski",
    "model_space",
    "flat_space",
    "space_to_json",
    "space_from_json",
]


@dataclass(frozen=True)
class DiscreteMMS:
    """Finite metric measure space: distance matrix and positive weights."""

    dist: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "weights", w)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if len(w) != d.shape[0]:
            raise ValueError("weights length must match the point count")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        violations = validate_mms(self)
        if violations:
            raise ValueError(f"not a metric space: {violations[0]} (+{len(violations) - 1} more)")

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def diameter(self) -> float:
        return float(self.dist.max())

    @classmethod
    def from_points(cls, coords: np.ndarray, weights=None) -> "DiscreteMMS":
        """Euclidean embedding: distances from point coordinates."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if coords.shape[0] == 1 and coords.shape[1] > 1:
            coords = coords.T
        diff = coords[:, None, :] - coords[None, :, :]
        d = np.sqrt((diff**2).sum(axis=-1))
        if weights is None:
            weights = np.full(len(coords), 1.0 / len(coords))
        return cls(d, np.asarray(weights, dtype=float))


def validate_mms(space: DiscreteMMS | np.ndarray, tol: float = 1e-12) -> list[str]:
    """All symmetry/diagonal/triangle violations, returned as data."""
    d = space.dist if isinstance(space, DiscreteMMS) else np.asarray(space, dtype=float)
    out: list[str] = []
    scale = max(float(d.max()), 1.0)
    bad = np.argwhere(np.abs(d - d.T) > tol * scale)
    out += [f"asymmetric at ({i},{j})" for i, j in bad if i < j]
    bad = np.argwhere(np.abs(np.diag(d)) > tol * scale)
    out += [f"nonzero diagonal at {i}" for (i,) in bad]
    if np.any(d < -tol * scale):
        out.append("negative distance")
    # d[i,j] <= d[i,k] + d[k,j] for every triple
    slack = d[:, None, :] - (d[:, :, None] + d[None, :, :])  # (i, k, j)
    bad = np.argwhere(slack > tol * scale)
    out += [f"triangle violated: d({i},{j}) > d({i},{k}) + d({k},{j})" for i, k, j in bad[:20]]
    return out


@dataclass(frozen=True)
class WeightedInterval:
    """Interval [lo, hi] with measure dm = e^{-V(x)} dx on a uniform grid."""

    potential: ScalarFunctionGrid

    @property
    def lo(self) -> float:
        return self.potential.lo

    @property
    def hi(self) -> float:
        return self.potential.hi

    @property
    def n(self) -> int:
        return self.potential.n

    @property
    def step(self) -> float:
        return self.potential.step

    @property
    def nodes(self) -> np.ndarray:
        return self.potential.nodes

    @property
    def weight(self) -> np.ndarray:
        """e^{-V} at the nodes; +inf potential maps to weight 0."""
        v = self.potential.values
        return np.where(np.isposinf(v), 0.0, np.exp(-v))

    @property
    def node_weights(self) -> np.ndarray:
        """Trapezoid lumping of dm onto the nodes (integrates node functions)."""
        w = self.weight * self.step
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @property
    def mass(self) -> float:
        return float(np.trapezoid(self.weight, dx=self.step))

    def weight_at(self, x) -> np.ndarray:
        """Piecewise-linear interpolant of the weight."""
        return np.interp(x, self.nodes, self.weight)

    def cumulative_weight(self, x) -> np.ndarray:
        """F(x) = int_lo^x e^{-V}, exact for the PL interpolant of the weight."""
        x = np.asarray(x, dtype=float)
        nodes, w, h = self.nodes, self.weight, self.step
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (w[:-1] + w[1:]) * h)])
        xc = np.clip(x, self.lo, self.hi)
        idx = np.clip(((xc - self.lo) // h).astype(int), 0, self.n - 1)
        s = xc - nodes[idx]
        slope = (w[idx + 1] - w[idx]) / h
        partial = w[idx] * s + 0.5 * slope * s * s
        out = cum[idx] + partial
        return float(out) if out.ndim == 0 else out

    def measure_of(self, a: float, b: float) -> float:
        """m([a, b] cap [lo, hi])."""
        if b <= a:
            return 0.0
        return float(self.cumulative_weight(b) - self.cumulative_weight(a))

    def support_extent(self) -> tuple[float, float]:
        """Closure of {weight > 0}: [first, last] node span with positive mass."""
        pos = np.nonzero(self.weight > 0)[0]
        if len(pos) == 0:
            raise ValueError("weight vanishes identically")
        lo_i = max(pos[0] - 1, 0)  # closure includes the adjacent zero node
        hi_i = min(pos[-1] + 1, self.n)
        return float(self.nodes[lo_i]), float(self.nodes[hi_i])

    def normalized(self) -> tuple["WeightedInterval", float]:
        """Rescale the measure to probability; returns (space, log Z).

        Shifts every relative entropy computed against this space by +log Z.
        """
        z = self.mass
        if not z > 0:
            raise ValueError("cannot normalize a zero-mass interval")
        shifted = ScalarFunctionGrid(self.lo, self.hi, self.potential.values + math.log(z))
        return WeightedInterval(shifted), math.log(z)


@dataclass(frozen=True)
class GeodesicSample:
    """A constant-speed geodesic sampled at parameters t_grid."""

    t_grid: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        p = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "points", p)
        if len(t) != len(p) or len(t) < 2:
            raise ValueError("need matching t_grid/points with at least two samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must be strictly increasing")

    @classmethod
    def on_interval(cls, a: float, b: float, t_grid) -> "GeodesicSample":
        t = np.asarray(t_grid, dtype=float)
        return cls(t, (1.0 - t) * a + t * b)

    def constant_speed_defect(self) -> float:
        """max relative deviation of |d(g_s, g_t)| from |s-t| d(g_0, g_1)."""
        d01 = abs(self.points[-1] - self.points[0]) / (self.t_grid[-1] - self.t_grid[0])
        if d01 == 0:
            return 0.0
        dev = 0.0
        d = np.abs(self.points[:, None] - self.points[None, :])
        dt = np.abs(self.t_grid[:, None] - self.t_grid[None, :])
        dev = float(np.max(np.abs(d - dt * d01))) / (d01 * (self.t_grid[-1] - self.t_grid[0]))
        return dev


def ball_volume(space: WeightedInterval, x0: float, r: float) -> float:
    """v(r) = m(closed ball of radius r around x0), clipped to the interval."""
    if not space.lo <= x0 <= space.hi:
        raise ValueError("center x0 outside the interval")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return space.measure_of(x0 - r, x0 + r)


def check_bishop_gromov(
    space: WeightedInterval, x0: float, r: float, R: float, k: float, n_dim: float
) -> float:
    """Margin of v(r)/v(R) >= int_0^r s_{K/N}^N dt / int_0^R s_{K/N}^N dt."""
    r_max = math.pi * math.sqrt(n_dim / k) if k > 0 else math.inf
    if not 0 < r < R <= r_max:
        raise ValueError(f"need 0 < r < R <= pi sqrt(N/(K v 0)) = {r_max}")
    kappa = k / n_dim
    num = quad(lambda t: s_kappa(kappa, t) ** n_dim, 0.0, r)[0]
    den = quad(lambda t: s_kappa(kappa, t) ** n_dim, 0.0, R)[0]
    vr = ball_volume(space, x0, r)
    vR = ball_volume(space, x0, R)
    if vR <= 0:
        raise ValueError("v(R) vanishes; center not in the support")
    return vr / vR - num / den


def check_bonnet_myers(space, k: float, n_dim: float) -> float:
    """Margin of diam(supp m) <= pi sqrt(N/K), K > 0."""
    if k <= 0:
        raise ValueError("Bonnet-Myers requires K > 0")
    if isinstance(space, WeightedInterval):
        a, b = space.support_extent()
        diam = b - a
    elif isinstance(space, DiscreteMMS):
        diam = space.diameter()
    else:
        raise TypeError("expected WeightedInterval or DiscreteMMS")
    return math.pi * math.sqrt(n_dim / k) - diam


def _interval_gap(a: tuple[float, float], b: tuple[float, float]) -> float:
    """inf distance between two closed intervals."""
    return max(0.0, a[0] - b[1], b[0] - a[1])


def _interval_span(a: tuple[float, float], b: tuple[float, float]) -> float:
    """sup distance between two closed intervals."""
    return max(abs(b[1] - a[0]), abs(a[1] - b[0]))


def check_brunn_minkowski(
    space: WeightedInterval,
    a0: tuple[float, float],
    a1: tuple[float, float],
    t: float,
    k: float,
    n_dim: float,
) -> float:
    """Margin of the generalized Brunn-Minkowski inequality on intervals.

    A_t is the exact set of t-midpoints {(1-t) a + t b}; Theta is the
    min/max endpoint distance according to the sign of K.  A singular
    sigma coefficient (K Theta^2/N >= pi^2) makes the margin -inf.
    """
    if n_dim < 1:
        raise ValueError("Brunn-Minkowski requires N >= 1")
    m0 = space.measure_of(*a0)
    m1 = space.measure_of(*a1)
    if m0 <= 0 or m1 <= 0:
        raise ValueError("both sets need positive measure")
    at = ((1.0 - t) * a0[0] + t * a1[0], (1.0 - t) * a0[1] + t * a1[1])
    if at[1] < at[0]:
        raise ValueError("empty midpoint set")
    mt = space.measure_of(*at)
    theta = _interval_gap(a0, a1) if k >= 0 else _interval_span(a0, a1)
    c0 = sigma(k / n_dim, 1.0 - t, theta)
    c1 = sigma(k / n_dim, t, theta)
    if c0.is_infinite or c1.is_infinite:
        return -math.inf
    rhs = c0.value * m0 ** (1.0 / n_dim) + c1.value * m1 ** (1.0 / n_dim)
    return mt ** (1.0 / n_dim) - rhs


def model_space(k: float, n_dim: float, n: int = 400) -> WeightedInterval:
    """The sharp 1D model: weight cos(x sqrt(K/(N-1)))^{N-1} on its maximal
    interval.  Satisfies the curvature-dimension bound at exactly (K, N)."""
    if k <= 0 or n_dim <= 1:
        raise ValueError("model space requires K > 0 and N > 1")
    a = math.sqrt(k / (n_dim - 1.0))
    half = 0.5 * math.pi / a
    x = np.linspace(-half, half, n + 1)
    with np.errstate(divide="ignore"):
        v = -(n_dim - 1.0) * np.log(np.maximum(np.cos(a * x), 0.0))
    v[0] = v[-1] = np.inf
    return WeightedInterval(ScalarFunctionGrid(-half, half, v))


def flat_space(lo: float = 0.0, hi: float = 1.0, n: int = 400) -> WeightedInterval:
    """Lebesgue measure on [lo, hi] (V = 0)."""
    return WeightedInterval(ScalarFunctionGrid(lo, hi, np.zeros(n + 1)))


def space_to_json(space) -> str:
    if isinstance(space, WeightedInterval):
        payload = {
            "type": "weighted_interval",
            "lo": space.lo,
            "hi": space.hi,
            "n": space.n,
            "V": "explicit",
            "values": [None if math.isinf(v) else v for v in space.potential.values],
        }
    elif isinstance(space, DiscreteMMS):
        payload = {
            "type": "discrete",
            "dist": space.dist.tolist(),
            "weights": space.weights.tolist(),
        }
    else:
        raise TypeError("expected WeightedInterval or DiscreteMMS")
    return json.dumps(payload, sort_keys=True)


def space_from_json(text: str):
    data = json.loads(text)
    kind = data.get("type")
    if kind == "weighted_interval":
        if data.get("V") == "cos_model":
            return model_space(float(data["K"]), float(data["N"]), int(data["n"]))
        values = np.array(
            [np.inf if v is None else float(v) for v in data["values"]], dtype=float
        )
        return WeightedInterval(ScalarFunctionGrid(float(data["lo"]), float(data["hi"]), values))
    if kind == "discrete":
        return DiscreteMMS(np.asarray(data["dist"], float), np.asarray(data["weights"], float))
    raise ValueError(f"unknown space type: {kind!r}")
