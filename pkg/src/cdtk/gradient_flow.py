"""EVI gradient flows of (K,N)-convex functions on an interval.

A gradient flow x' = -S'(x) of a (K,N)-convex S satisfies, for every
reference point z in the domain, the Evolution Variational Inequality

    d/dt s(d(x_t,z)/2)^2 + K s(d(x_t,z)/2)^2 <= (N/2)(1 - U_N(z)/U_N(x_t)),

where s = s_{K/N} and U_N = exp(-S/N); conversely the inequality forces
the flow equation.  The integrated form over [t0, t1] reads

    e_K(t1-t0) (N/2)(1 - U_N(z)/U_N(x_{t1}))
        >= e^{K(t1-t0)} s(d(x_{t1},z)/2)^2 - s(d(x_{t0},z)/2)^2,

and two flows (x_t), (y_s) obey the space-time expansion bound

    s(d(x_t,y_s)/2)^2 <= e^{-K(s+t)} s(d(x_0,y_0)/2)^2
                         + N e_{-K}(s+t) (sqrt t - sqrt s)^2 / (2(s+t)),

together with the simplified bound (tau = 2(t + sqrt(ts) + s)/3)

    d(x_t,y_s)^2 <= e^{-K tau} d(x_0,y_0)^2
                    + 2N (1 - e^{-K tau})/(K tau) (sqrt t - sqrt s)^2,

whose diagonal s = t is the plain contraction d(x_t,y_t) <= e^{-Kt} d0.

Trajectories are integrated with a classical 4th-order one-step scheme;
EVI time derivatives use centered differences (second-order one-sided at
the ends).  Residual tolerance: tol = c (dt^2 + step^2), c = 50.  Every
K -> 0 coefficient limit is taken through the expm1-based e_kappa.

The cos model S = -N log cos(x sqrt(K/N)) flows in closed form:
sin(a x_t) = sin(a x_0) e^{-Kt} with a = sqrt(K/N); `cos_model_exact_flow`
exposes it as the oracle for the integrator and the contraction bounds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coeffs import e_kappa, s_kappa
from .convexity import ScalarFunctionGrid

__all__ = [
    "Function1D",
    "GridFunction1D",
    "flow_cos_model",
    "flow_cosh_model",
    "FlowTrajectory",
    "integrate_flow",
    "cos_model_exact_flow",
    "cosh_model_exact_flow",
    "evi_residual",
    "evi_integrated",
    "check_regularization",
    "ContractionReport",
    "check_contraction",
    "check_simplified_expansion",
    "DowngradeReport",
    "evi_consistency_downgrade",
    "residual_tolerance",
    "export_trajectory_csv",
]

TOL_C = 50.0


def residual_tolerance(dt: float, step: float = 0.0) -> float:
    return TOL_C * (dt * dt + step * step)


@dataclass(frozen=True)
class Function1D:
    """A differentiable function on [lo, hi] with an analytic derivative."""

    name: str
    lo: float
    hi: float
    value: Callable
    grad: Callable

    @property
    def step(self) -> float:
        return 0.0  # analytic derivative: no grid error contribution


class GridFunction1D:
    """Adapter exposing a ScalarFunctionGrid through the Function1D surface.

    Values interpolate linearly; the gradient interpolates the central
    differences of the interior nodes.
    """

    def __init__(self, grid: ScalarFunctionGrid, name: str = "grid"):
        self.name = name
        self.grid = grid
        self.lo = grid.lo
        self.hi = grid.hi
        self.step = grid.step
        self._d1 = grid.first_difference()

    def value(self, x):
        return np.interp(x, self.grid.nodes, self.grid.values)

    def grad(self, x):
        return np.interp(x, self.grid.nodes[1:-1], self._d1)


def flow_cos_model(k: float, n_dim: float) -> Function1D:
    """S = -N log cos(x sqrt(K/N)); S' = sqrt(KN) tan(x sqrt(K/N))."""
    if k <= 0 or n_dim <= 0:
        raise ValueError("cos model requires K > 0 and N > 0")
    a = math.sqrt(k / n_dim)
    half = 0.5 * math.pi / a
    return Function1D(
        name=f"cos:K={k},N={n_dim}",
        lo=-half,
        hi=half,
        value=lambda x: -n_dim * np.log(np.cos(a * np.asarray(x, dtype=float))),
        grad=lambda x: n_dim * a * np.tan(a * np.asarray(x, dtype=float)),
    )


def flow_cosh_model(k: float, n_dim: float, half_width: float = 8.0) -> Function1D:
    """S = -N log cosh(x sqrt(-K/N)), K < 0; S' = -sqrt(-KN) tanh(.)."""
    if k >= 0 or n_dim <= 0:
        raise ValueError("cosh model requires K < 0 and N > 0")
    a = math.sqrt(-k / n_dim)
    return Function1D(
        name=f"cosh:K={k},N={n_dim}",
        lo=-half_width,
        hi=half_width,
        value=lambda x: -n_dim * np.log(np.cosh(a * np.asarray(x, dtype=float))),
        grad=lambda x: -n_dim * a * np.tanh(a * np.asarray(x, dtype=float)),
    )


@dataclass(frozen=True)
class FlowTrajectory:
    times: np.ndarray
    states: np.ndarray
    step: float
    exited: bool = False

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "states", np.asarray(self.states, dtype=float))
        if self.times[0] != 0.0:
            raise ValueError("trajectories start at time 0")


def integrate_flow(s, x0: float, dt: float, t_final: float) -> FlowTrajectory:
    """Integrate x' = -S'(x) with the classical 4th-order one-step method.

    The trajectory is truncated (and flagged) if it leaves the open domain.
    """
    if not s.lo < x0 < s.hi:
        raise ValueError("x0 must be interior to the domain")
    if dt <= 0 or t_final <= 0:
        raise ValueError("dt and T must be positive")
    n_steps = int(round(t_final / dt))
    xs = [x0]
    x = x0
    exited = False
    f = lambda y: -float(s.grad(y))
    for _ in range(n_steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x_new = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not (s.lo < x_new < s.hi) or not math.isfinite(x_new):
            exited = True
            break
        x = x_new
        xs.append(x)
    times = dt * np.arange(len(xs))
    return FlowTrajectory(times, np.array(xs), dt, exited)


def cos_model_exact_flow(k: float, n_dim: float, x0: float, times) -> FlowTrajectory:
    """Closed-form cos-model flow: sin(a x_t) = sin(a x_0) e^{-Kt}."""
    a = math.sqrt(k / n_dim)
    t = np.asarray(times, dtype=float)
    states = np.arcsin(np.sin(a * x0) * np.exp(-k * t)) / a
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    return FlowTrajectory(t, states, dt)


def cosh_model_exact_flow(k: float, n_dim: float, x0: float, times) -> FlowTrajectory:
    """Closed-form cosh-model flow: sinh(a x_t) = sinh(a x_0) e^{-Kt}, K < 0."""
    a = math.sqrt(-k / n_dim)
    t = np.asarray(times, dtype=float)
    states = np.arcsinh(np.sinh(a * x0) * np.exp(-k * t)) / a
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    return FlowTrajectory(t, states, dt)


def _time_derivative(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Second-order derivative on a uniform time grid (one-sided at ends)."""
    dt = t[1] - t[0]
    dy = np.empty_like(y)
    dy[1:-1] = (y[2:] - y[:-2]) / (2.0 * dt)
    dy[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt)
    dy[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * dt)
    return dy


def _u_of(s, x, n_dim: float):
    return np.exp(-np.asarray(s.value(x), dtype=float) / n_dim)


def evi_residual(traj: FlowTrajectory, z: float, k: float, n_dim: float, s) -> np.ndarray:
    """Per-time EVI residuals RHS - LHS; the flow is certified when the
    minimum clears -tol."""
    uz = float(_u_of(s, z, n_dim))
    if uz == 0.0:
        raise ValueError("reference point z must have finite S(z)")
    kappa = k / n_dim
    ssq = s_kappa(kappa, 0.5 * np.abs(traj.states - z)) ** 2
    lhs = _time_derivative(ssq, traj.times) + k * ssq
    rhs = 0.5 * n_dim * (1.0 - uz / _u_of(s, traj.states, n_dim))
    return rhs - lhs


def evi_integrated(
    traj: FlowTrajectory, z: float, k: float, n_dim: float, s, t0: float, t1: float
) -> float:
    """Margin of the integrated EVI between trajectory times t0 <= t1."""
    if t1 < t0:
        raise ValueError("need t0 <= t1")
    i0 = int(np.argmin(np.abs(traj.times - t0)))
    i1 = int(np.argmin(np.abs(traj.times - t1)))
    dt = traj.times[i1] - traj.times[i0]
    kappa = k / n_dim
    uz = float(_u_of(s, z, n_dim))
    s0 = s_kappa(kappa, 0.5 * abs(traj.states[i0] - z)) ** 2
    s1 = s_kappa(kappa, 0.5 * abs(traj.states[i1] - z)) ** 2
    lhs = e_kappa(k, dt) * 0.5 * n_dim * (1.0 - uz / float(_u_of(s, traj.states[i1], n_dim)))
    rhs = math.exp(k * dt) * s1 - s0
    return float(lhs - rhs)


def check_regularization(traj: FlowTrajectory, z: float, k: float, n_dim: float, s) -> np.ndarray:
    """Margins of U_N(z)/U_N(x_t) <= 1 + (2/(N e_K(t))) s(d(x_0,z)/2)^2, t > 0."""
    pos = traj.times > 0
    kappa = k / n_dim
    uz = float(_u_of(s, z, n_dim))
    ratio = uz / _u_of(s, traj.states[pos], n_dim)
    bound = 1.0 + 2.0 / (n_dim * e_kappa(k, traj.times[pos])) * s_kappa(
        kappa, 0.5 * abs(traj.states[0] - z)
    ) ** 2
    return bound - ratio


@dataclass(frozen=True)
class ContractionReport:
    s_values: np.ndarray
    t_values: np.ndarray
    margins: np.ndarray  # indexed (t, s)
    min_margin: float
    passed: bool
    tol: float


def _subsample(times: np.ndarray, count: int) -> np.ndarray:
    idx = np.unique(np.linspace(0, len(times) - 1, count).astype(int))
    return idx


def check_contraction(
    traj_a: FlowTrajectory,
    traj_b: FlowTrajectory,
    k: float,
    n_dim: float,
    grid_points: int = 30,
    tol: float | None = None,
) -> ContractionReport:
    """Space-time expansion bound for two flows of the same function."""
    kappa = k / n_dim
    ia = _subsample(traj_a.times, grid_points)
    ib = _subsample(traj_b.times, grid_points)
    t = traj_a.times[ia][:, None]
    s = traj_b.times[ib][None, :]
    xt = traj_a.states[ia][:, None]
    ys = traj_b.states[ib][None, :]
    lhs = s_kappa(kappa, 0.5 * np.abs(xt - ys)) ** 2
    d0sq = s_kappa(kappa, 0.5 * abs(traj_a.states[0] - traj_b.states[0])) ** 2
    tau = s + t
    ratio = np.divide(
        (np.sqrt(t) - np.sqrt(s)) ** 2, 2.0 * tau, out=np.zeros_like(tau), where=tau > 0
    )
    rhs = np.exp(-k * tau) * d0sq + n_dim * e_kappa(-k, tau) * ratio
    margins = rhs - lhs
    if tol is None:
        tol = residual_tolerance(traj_a.step, getattr(traj_a, "space_step", 0.0))
    m = float(margins.min())
    return ContractionReport(traj_b.times[ib], traj_a.times[ia], margins, m, m >= -tol, tol)


def check_simplified_expansion(
    traj_a: FlowTrajectory,
    traj_b: FlowTrajectory,
    k: float,
    n_dim: float,
    grid_points: int = 30,
    tol: float | None = None,
) -> ContractionReport:
    """Distance-level expansion bound with tau = 2(t + sqrt(ts) + s)/3."""
    ia = _subsample(traj_a.times, grid_points)
    ib = _subsample(traj_b.times, grid_points)
    t = traj_a.times[ia][:, None]
    s = traj_b.times[ib][None, :]
    xt = traj_a.states[ia][:, None]
    ys = traj_b.states[ib][None, :]
    d0 = abs(traj_a.states[0] - traj_b.states[0])
    tau = 2.0 * (t + np.sqrt(t * s) + s) / 3.0
    # (1 - e^{-K tau})/(K tau) -> 1 as tau -> 0, via e_kappa
    psi = np.divide(e_kappa(-k, tau), tau, out=np.ones_like(tau), where=tau > 0)
    rhs = np.exp(-k * tau) * d0 * d0 + 2.0 * n_dim * psi * (np.sqrt(t) - np.sqrt(s)) ** 2
    margins = rhs - (xt - ys) ** 2
    if tol is None:
        tol = residual_tolerance(traj_a.step)
    m = float(margins.min())
    return ContractionReport(traj_b.times[ib], traj_a.times[ia], margins, m, m >= -tol, tol)


@dataclass(frozen=True)
class DowngradeReport:
    residuals: np.ndarray
    kflow_margins: np.ndarray
    passed: bool
    tol: float


def evi_consistency_downgrade(
    traj: FlowTrajectory,
    z: float,
    k: float,
    n_dim: float,
    k_prime: float,
    n_prime: float,
    s,
    tol: float | None = None,
) -> DowngradeReport:
    """Certify the EVI at weaker parameters (K' <= K, N' >= N) and the
    N = infinity form (1/2) d/dt d^2 + (K/2) d^2 <= S(z) - S(x_t).

    Refuses to run unless the flow is certified at (K, N) first: the lemma
    gives no converse, so nothing can be inferred from an uncertified flow.
    """
    if k_prime > k or n_prime < n_dim:
        raise ValueError("downgrade needs K' <= K and N' >= N")
    if tol is None:
        tol = residual_tolerance(traj.step, getattr(s, "step", 0.0))
    base = evi_residual(traj, z, k, n_dim, s)
    if float(base.min()) < -tol:
        raise ValueError("flow is not certified EVI at (K, N); cannot downgrade")
    res = evi_residual(traj, z, k_prime, n_prime, s)
    dsq = (traj.states - z) ** 2
    kflow = (
        np.asarray(s.value(z) - s.value(traj.states), dtype=float)
        - 0.5 * _time_derivative(dsq, traj.times)
        - 0.5 * k * dsq
    )
    passed = float(res.min()) >= -tol and float(kflow.min()) >= -tol
    return DowngradeReport(res, kflow, passed, tol)


def export_trajectory_csv(path: str, traj: FlowTrajectory, s, n_dim: float) -> None:
    """Write (t, x, S(x), U_N(x)) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "S", "U_N"])
        sv = np.asarray(s.value(traj.states), dtype=float)
        for t, x, v in zip(traj.times, traj.states, sv):
            writer.writerow([repr(float(t)), repr(float(x)), repr(float(v)), repr(math.exp(-v / n_dim))])
