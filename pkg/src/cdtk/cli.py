"""Batch runner: every certifier as a subcommand over config or flags.

    cdtk run   --check lichnerowicz --space model:K=2,N=3 --n 2000
    cdtk run   --check evi --model cos:K=1,N=1 --x0 0.7 --dt 1e-3 --T 3
    cdtk run   --check be --space twopoint:q=1 --K 1.0 --N 2
    cdtk sweep --check be --space twopoint:q=1 --N 2 --range K=0:3
    cdtk list-checks
    cdtk export-space --space model:K=2,N=3 --n 400 --out space.json

Space descriptors: ``model:K=..,N=..`` (the sharp 1D model space),
``flat:lo=..,hi=..`` (Lebesgue interval), ``twopoint:q=..`` (two-state
generator), or ``file:path.json`` (the JSON space schema).  Model
descriptors for convexity/flow checks: ``cos:K=..,N=..``, ``cosh:K=..,N=..``,
``log:N=..``, ``sinh:K=..,N=..``.

Reports echo the full effective configuration (every default included) and
are byte-identical for identical configs: no timestamps, sorted keys,
repr-rendered floats.  Exit status: 0 all cases passed, 1 some case failed,
2 configuration error.  ``sweep`` bisects the single ranged parameter to
the requested resolution and reports the crossing (largest passing K,
or smallest passing N).  CDTK_THREADS sets the worker count for
embarrassingly parallel case grids; results do not depend on it.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from . import convexity as cx
from . import coeffs
from . import entropy_flow as ef
from . import gradient_flow as gf
from . import markov_gamma as mg
from . import metric_measure as mm
from . import transport as tp

__all__ = ["main", "RunConfig", "Report", "run_check", "run_sweep", "CHECKS"]


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    check: str
    space: str | None = None
    model: str | None = None
    K: float | None = None
    N: float | None = None
    n: int = 400
    samples: int = 64
    pairs: int = 20
    seed: int = 0
    x0: float = 0.3
    y0: float = -0.5
    dt: float = 1e-3
    T: float = 3.0
    t_points: int = 21
    z_points: int = 41
    tol: float | None = None
    out: str | None = None
    csv_out: str | None = None

    def resolved_tol(self, default: float) -> float:
        return default if self.tol is None else self.tol


@dataclass
class Report:
    check: str
    config: dict
    cases: list
    min_margin: float
    argmin: dict
    passed: bool
    version: str = __version__
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=_jsonable, indent=2)

    def write_csv(self, path: str) -> None:
        keys = sorted({k for c in self.cases for k in c} - {"id", "margin", "passed"})
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", *keys, "margin", "passed"])
            for c in self.cases:
                writer.writerow(
                    [c["id"], *[_csvable(c.get(k, "")) for k in keys],
                     repr(float(c["margin"])), c["passed"]]
                )


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON-serializable: {type(x)}")


def _csvable(x):
    if isinstance(x, float):
        return repr(x)
    return x


def _pool_map(fn, items):
    threads = int(os.environ.get("CDTK_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _parse_kv(spec: str) -> tuple[str, dict]:
    if ":" not in spec:
        return spec, {}
    head, _, tail = spec.partition(":")
    params = {}
    for item in tail.split(","):
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"malformed parameter {item!r} in {spec!r}")
        key, _, val = item.partition("=")
        params[key] = float(val)
    return head, params


def parse_space(cfg: RunConfig):
    if cfg.space is None:
        raise ConfigError(f"check {cfg.check!r} needs --space")
    kind, params = _parse_kv(cfg.space)
    if kind == "model":
        return mm.model_space(params["K"], params["N"], cfg.n)
    if kind == "flat":
        return mm.flat_space(params.get("lo", 0.0), params.get("hi", 1.0), cfg.n)
    if kind == "twopoint":
        return mg.two_point_space(params.get("q", 1.0))
    if kind == "file":
        _, _, path = cfg.space.partition(":")
        with open(path) as fh:
            return mm.space_from_json(fh.read())
    if cfg.space.endswith(".json"):
        with open(cfg.space) as fh:
            return mm.space_from_json(fh.read())
    raise ConfigError(f"unknown space descriptor {cfg.space!r}")


def _space_params(cfg: RunConfig) -> dict:
    return _parse_kv(cfg.space)[1] if cfg.space else {}


def parse_model_grid(cfg: RunConfig) -> tuple[cx.ScalarFunctionGrid, float, float]:
    if cfg.model is None:
        raise ConfigError(f"check {cfg.check!r} needs --model")
    kind, params = _parse_kv(cfg.model)
    k, n_dim = params.get("K"), params.get("N")
    if kind == "cos":
        return cx.cos_model(k, n_dim, cfg.n), k, n_dim
    if kind == "log":
        return cx.log_model(n_dim, n=cfg.n), 0.0, n_dim
    if kind == "sinh":
        return cx.sinh_model(k, n_dim, n=cfg.n), k, n_dim
    if kind == "cosh":
        return cx.cosh_model(k, n_dim, n=cfg.n), k, n_dim
    raise ConfigError(f"unknown model {cfg.model!r}")


def parse_flow_model(cfg: RunConfig):
    kind, params = _parse_kv(cfg.model or "")
    if kind == "cos":
        return gf.flow_cos_model(params["K"], params["N"]), params["K"], params["N"]
    if kind == "cosh":
        return gf.flow_cosh_model(params["K"], params["N"]), params["K"], params["N"]
    raise ConfigError(f"unknown flow model {cfg.model!r} (expected cos:... or cosh:...)")


def _kn(cfg: RunConfig, default_k: float | None = None, default_n: float | None = None):
    k = cfg.K if cfg.K is not None else default_k
    n_dim = cfg.N if cfg.N is not None else default_n
    if k is None or n_dim is None:
        raise ConfigError("this check needs --K and --N (no model default available)")
    return k, n_dim


def _generator_for(cfg: RunConfig) -> mg.MarkovGenerator:
    kind, params = _parse_kv(cfg.space or "")
    if kind == "twopoint":
        return mg.two_point_space(params.get("q", 1.0))
    space = parse_space(cfg)
    if isinstance(space, mm.WeightedInterval):
        return mg.build_fd_generator(space)
    raise ConfigError("no generator construction for this space")


# ---------------------------------------------------------------- checks

def _run_coeffs(cfg: RunConfig):
    rng = np.random.default_rng(cfg.seed)
    n_cases = 10_000
    cases = []

    k = rng.uniform(-4.0, 4.0, 3 * n_cases)
    n_dim = rng.uniform(0.5, 10.0, 3 * n_cases)
    cap = np.where(k > 0, math.pi * 0.999 / np.sqrt(np.abs(k) / n_dim + 1e-300), 3.0)
    theta = rng.uniform(0.0, 1.0, 3 * n_cases) * np.minimum(cap, 3.0)
    # stay clear of the 1 - c cancellation zone, where a 1e-12 relative
    # claim is not representable in doubles
    keep = np.abs(k / n_dim) * theta**2 >= 1e-3
    k, n_dim, theta = k[keep][:n_cases], n_dim[keep][:n_cases], theta[keep][:n_cases]
    s_half = np.array([coeffs.s_kappa(ki / ni, 0.5 * th) for ki, ni, th in zip(k, n_dim, theta)])
    c_full = np.array([coeffs.c_kappa(ki / ni, th) for ki, ni, th in zip(k, n_dim, theta)])
    lhs = 2.0 / n_dim * s_half**2
    rhs = (1.0 - c_full) / k
    defect = np.max(np.abs(lhs - rhs) / np.abs(rhs))
    cases.append({"id": "sc-trick", "margin": 1e-12 - float(defect), "passed": bool(defect <= 1e-12)})

    s_full = np.array([coeffs.s_kappa(ki / ni, th) for ki, ni, th in zip(k, n_dim, theta)])
    defect = np.max(
        np.abs(c_full**2 + (k / n_dim) * s_full**2 - 1.0) / np.maximum(1.0, c_full**2)
    )
    cases.append({"id": "pythagorean", "margin": 1e-12 - float(defect), "passed": bool(defect <= 1e-12)})

    t = rng.uniform(0.0, 1.0, n_cases)
    kap = rng.uniform(-4.0, 4.0, n_cases)
    th = rng.uniform(0.0, 2.0, n_cases)
    ok = kap * th * th < math.pi**2 * 0.999
    worst = 0.0
    for ki, ti, hi in zip(kap[ok][:10000], t[ok][:10000], th[ok][:10000]):
        lo_v = coeffs.sigma(ki, 0.0, hi).value
        hi_v = coeffs.sigma(ki, 1.0, hi).value
        worst = max(worst, abs(lo_v), abs(hi_v - 1.0))
    cases.append({"id": "boundary-values", "margin": 1e-14 - worst, "passed": worst <= 1e-14})

    worst = -np.inf
    for ki, ti, hi in zip(kap[ok][:5000], t[ok][:5000], th[ok][:5000]):
        k2 = ki + abs(rng.standard_normal()) * 0.1
        if k2 * hi * hi >= math.pi**2:
            continue
        diff = coeffs.sigma(k2, ti, hi).value - coeffs.sigma(ki, ti, hi).value
        worst = max(worst, -diff)
    cases.append({"id": "monotone-in-kappa", "margin": 1e-12 - max(worst, 0.0), "passed": worst <= 1e-12})

    worst = 0.0
    for _ in range(10_000 // 4):
        t0 = rng.uniform(0.0, 1.0)
        x0, y0, x1, y1 = rng.uniform(-2.0, 2.0, 4)
        kap0, kap1 = rng.uniform(-4.0, math.pi**2 * 0.99, 2)
        mid = coeffs.g_interp(t0, 0.5 * (x0 + x1), 0.5 * (y0 + y1), 0.5 * (kap0 + kap1))
        avg = 0.5 * (coeffs.g_interp(t0, x0, y0, kap0) + coeffs.g_interp(t0, x1, y1, kap1))
        worst = max(worst, mid - avg)
    cases.append({"id": "g-midpoint-convexity", "margin": 1e-10 - worst, "passed": worst <= 1e-10})
    return cases, {}


def _run_convexity(cfg: RunConfig, form: str):
    grid, k0, n0 = parse_model_grid(cfg)
    k, n_dim = _kn(cfg, k0, n0)
    if form == "sigma":
        rep = cx.check_kn_sigma(grid, k, n_dim, samples=cfg.samples, seed=cfg.seed, tol=cfg.tol)
    elif form == "green":
        rep = cx.check_kn_green(grid, k, n_dim, samples=cfg.samples, seed=cfg.seed, tol=cfg.tol)
    else:
        rep = cx.check_kn_pointwise(grid, k, n_dim)
    case = {"id": rep.form, "K": k, "N": n_dim, "margin": rep.min_margin, "passed": rep.passed}
    return [case], {"tol": rep.tol, "argmin": rep.argmin, "n_singular": rep.n_singular}


def _run_bishop_gromov(cfg: RunConfig):
    space = parse_space(cfg)
    k, n_dim = _kn(cfg, *_model_kn(cfg))
    tol = cfg.resolved_tol(1e-6)
    half = min(abs(space.lo), abs(space.hi))
    radii = np.linspace(half / 10.0, half, 10)
    grid = [(float(r), float(R)) for i, r in enumerate(radii) for R in radii[i + 1:]]

    def one(rR):
        r, R = rR
        margin = mm.check_bishop_gromov(space, 0.0, r, R, k, n_dim)
        return {"id": f"r={r:.4f},R={R:.4f}", "r": r, "R": R, "margin": margin,
                "passed": margin >= -tol}

    return _pool_map(one, grid), {"tol": tol}


def _model_kn(cfg: RunConfig):
    params = _space_params(cfg)
    return params.get("K"), params.get("N")


def _run_bonnet_myers(cfg: RunConfig):
    space = parse_space(cfg)
    k, n_dim = _kn(cfg, *_model_kn(cfg))
    tol = cfg.resolved_tol(1e-9)
    margin = mm.check_bonnet_myers(space, k, n_dim)
    return [{"id": "diameter", "margin": margin, "passed": margin >= -tol}], {"tol": tol}


def _run_brunn_minkowski(cfg: RunConfig):
    space = parse_space(cfg)
    k, n_dim = _kn(cfg, *_model_kn(cfg))
    tol = cfg.resolved_tol(1e-6)
    rng = np.random.default_rng(cfg.seed)
    cases = []
    for i in range(cfg.samples):
        a = np.sort(rng.uniform(space.lo, space.hi, 2))
        b = np.sort(rng.uniform(space.lo, space.hi, 2))
        a = (a[0], max(a[1], a[0] + 0.05 * (space.hi - space.lo)))
        b = (b[0], max(b[1], b[0] + 0.05 * (space.hi - space.lo)))
        t = float(rng.uniform(0.0, 1.0))
        margin = mm.check_brunn_minkowski(space, a, b, t, k, n_dim)
        cases.append({"id": f"pair{i}", "t": t, "margin": margin, "passed": margin >= -tol})
    return cases, {"tol": tol}


def _run_w2_cross(cfg: RunConfig):
    space = parse_space(cfg)
    tol = cfg.resolved_tol(1e-6)
    rng = np.random.default_rng(cfg.seed)
    disc = mm.DiscreteMMS.from_points(space.nodes, np.maximum(space.node_weights, 1e-12))
    cases = []
    for i in range(cfg.pairs):
        mu = tp.density(disc, rng.random(disc.n))
        nu = tp.density(disc, rng.random(disc.n))
        lp, _ = tp.w2_discrete(disc, mu, nu)
        quant = tp.w2_quantile_1d(space, tp.density(space, mu.rho), tp.density(space, nu.rho))
        diff = abs(lp - quant)
        cases.append({"id": f"pair{i}", "margin": tol - diff, "passed": diff <= tol})
    return cases, {"tol": tol}


def _run_cde(cfg: RunConfig, green: bool):
    space = parse_space(cfg)
    k, n_dim = _kn(cfg, *_model_kn(cfg))
    tol = cfg.resolved_tol(ef.DEFAULT_TOL)
    pairs = ef.seeded_density_pairs(space, cfg.pairs, cfg.seed)
    t_grid = np.linspace(0.0, 1.0, cfg.t_points)
    checker = ef.check_green_cde if green else ef.check_cde

    def one(item):
        i, (mu0, mu1) = item
        rep = checker(space, mu0, mu1, k, n_dim, t_grid, tol=tol)
        return {"id": f"pair{i}", "w2": rep.w2, "margin": rep.min_margin,
                "passed": rep.passed, "singular": rep.singular}

    return _pool_map(one, list(enumerate(pairs))), {"tol": tol}


def _run_functional(cfg: RunConfig, which: str):
    space, _ = parse_space(cfg).normalized()
    k, n_dim = _kn(cfg, *_model_kn(cfg))
    tol = cfg.resolved_tol(ef.DEFAULT_TOL)
    pairs = ef.seeded_density_pairs(space, cfg.pairs, cfg.seed)
    cases = []
    for i, (mu0, mu1) in enumerate(pairs):
        if which == "nhwi":
            margin = ef.check_nhwi(space, mu0, mu1, k, n_dim)
        elif which == "nlsi":
            margin = ef.check_nlsi(space, mu0, k, n_dim)
        elif which == "ntalagrand":
            rep = ef.check_ntalagrand(space, mu0, k, n_dim, tol=tol)
            margin = min(rep.ent_margin, rep.diam_margin)
        else:
            margin = ef.check_talagrand_from_lsi(space, mu0, k, n_dim)
        cases.append({"id": f"case{i}", "margin": float(margin), "passed": margin >= -tol})
    return cases, {"tol": tol}


def _run_evi(cfg: RunConfig):
    model, k0, n0 = parse_flow_model(cfg)
    k, n_dim = _kn(cfg, k0, n0)
    traj = gf.integrate_flow(model, cfg.x0, cfg.dt, cfg.T)
    tol = cfg.resolved_tol(gf.residual_tolerance(cfg.dt, model.step))
    inset = (model.hi - model.lo) / (cfg.z_points + 1)
    z_grid = np.linspace(model.lo + inset, model.hi - inset, cfg.z_points)

    def one(z):
        res = gf.evi_residual(traj, float(z), k, n_dim, model)
        m = float(res.min())
        return {"id": f"z={z:.4f}", "z": float(z), "margin": m, "passed": m >= -tol}

    return _pool_map(one, z_grid), {"tol": tol, "exited": traj.exited}


def _run_contraction(cfg: RunConfig, simplified: bool):
    model, k0, n0 = parse_flow_model(cfg)
    k, n_dim = _kn(cfg, k0, n0)
    ta = gf.integrate_flow(model, cfg.x0, cfg.dt, cfg.T)
    tb = gf.integrate_flow(model, cfg.y0, cfg.dt, cfg.T)
    checker = gf.check_simplified_expansion if simplified else gf.check_contraction
    rep = checker(ta, tb, k, n_dim, grid_points=30, tol=cfg.tol)
    case = {"id": "grid", "margin": rep.min_margin, "passed": rep.passed}
    return [case], {"tol": rep.tol}


def _run_be(cfg: RunConfig):
    gen = _generator_for(cfg)
    k, n_dim = _kn(cfg, *_model_kn(cfg))
    battery = mg.battery_functions(gen, seed=cfg.seed)
    cases = []
    tol = None
    for name, f in battery:
        rep = mg.check_be(gen, f, np.ones(gen.n), k, n_dim)
        tol = rep.tol if tol is None else max(tol, rep.tol)
        cases.append({"id": name, "margin": rep.min_pointwise, "passed": rep.passed,
                      "weak_margin": rep.weak_margin})
    return cases, {"tol": tol}


def _run_bl(cfg: RunConfig):
    gen = _generator_for(cfg)
    k, n_dim = _kn(cfg, *_model_kn(cfg))
    battery = mg.battery_functions(gen, seed=cfg.seed)
    times = np.linspace(0.05, 2.0, 10)
    cases = []
    tol = None
    for name, f in battery:
        scale = float(np.max(np.abs(mg.gamma2(gen, f))))
        t_tol = mg.fd_tolerance(gen, scale)
        tol = t_tol if tol is None else max(tol, t_tol)
        for t in times:
            m = float(mg.check_bl(gen, f, float(t), k, n_dim).min())
            cases.append({"id": f"{name},t={t:.2f}", "margin": m, "passed": m >= -t_tol})
    return cases, {"tol": tol}


def _run_lichnerowicz(cfg: RunConfig):
    gen = _generator_for(cfg)
    k, n_dim = _kn(cfg, *_model_kn(cfg))
    tol = cfg.resolved_tol(1e-3)
    margin = mg.check_lichnerowicz(gen, k, n_dim)
    lam1, _ = mg.spectral_gap(gen)
    case = {"id": "lambda1", "lambda1": lam1, "margin": margin, "passed": margin >= -tol}
    return [case], {"tol": tol, "connected": gen.is_connected()}


def _run_ric_nv(cfg: RunConfig):
    space = parse_space(cfg)
    k, n_dim = _kn(cfg, *_model_kn(cfg))
    tol = cfg.resolved_tol(1e-6)
    ric = mg.ric_nv_1d(space, n_dim)
    margin = float(np.min(ric.values)) - k
    case = {"id": "pointwise", "margin": margin, "passed": margin >= -tol}
    return [case], {"tol": tol, "max_ric": float(np.max(ric.values))}


CHECKS = {
    "coeffs-identities": (lambda c: _run_coeffs(c), "randomized identity suite for the comparison coefficients"),
    "kn-sigma": (lambda c: _run_convexity(c, "sigma"), "(K,N)-convexity, sigma-interpolation form"),
    "kn-green": (lambda c: _run_convexity(c, "green"), "(K,N)-convexity, Green-function form"),
    "kn-pointwise": (lambda c: _run_convexity(c, "pointwise"), "(K,N)-convexity, finite-difference Hessian form"),
    "bishop-gromov": (_run_bishop_gromov, "volume-ratio growth bound on an (r,R) grid"),
    "bonnet-myers": (_run_bonnet_myers, "diameter bound for K > 0"),
    "brunn-minkowski": (_run_brunn_minkowski, "midpoint-set measure interpolation bound"),
    "w2-cross": (_run_w2_cross, "exact LP transport vs 1D quantile formula"),
    "cde": (lambda c: _run_cde(c, False), "entropy convexity along displacement interpolation"),
    "green-cde": (lambda c: _run_cde(c, True), "Green-function form of the entropy convexity"),
    "nhwi": (lambda c: _run_functional(c, "nhwi"), "dimensional HWI inequality"),
    "nlsi": (lambda c: _run_functional(c, "nlsi"), "dimensional log-Sobolev inequality"),
    "ntalagrand": (lambda c: _run_functional(c, "ntalagrand"), "dimensional Talagrand inequality"),
    "talagrand-lsi": (lambda c: _run_functional(c, "talagrand-lsi"), "Talagrand bound derived from the LSI"),
    "evi": (_run_evi, "evolution variational inequality along an integrated flow"),
    "contraction": (lambda c: _run_contraction(c, False), "space-time expansion bound for two flows"),
    "expansion": (lambda c: _run_contraction(c, True), "simplified distance-level expansion bound"),
    "be": (_run_be, "Bochner inequality over the test battery"),
    "bl": (_run_bl, "Bakry-Ledoux gradient estimate over the battery and a t-sweep"),
    "lichnerowicz": (_run_lichnerowicz, "spectral gap vs K N/(N-1)"),
    "ric-nv": (_run_ric_nv, "1D weighted-manifold curvature criterion"),
}


def run_check(cfg: RunConfig) -> Report:
    if cfg.check not in CHECKS:
        raise ConfigError(f"unknown check {cfg.check!r}; see list-checks")
    runner, _ = CHECKS[cfg.check]
    cases, extra = runner(cfg)
    if not cases:
        raise ConfigError("check produced no cases")
    worst = min(cases, key=lambda c: c["margin"])
    report = Report(
        check=cfg.check,
        config={k: v for k, v in asdict(cfg).items()},
        cases=cases,
        min_margin=float(worst["margin"]),
        argmin={"id": worst["id"]},
        passed=all(c["passed"] for c in cases),
        extra=extra,
    )
    return report


def run_sweep(cfg: RunConfig, param: str, lo: float, hi: float, resolution: float = 1e-4) -> Report:
    if param not in ("K", "N"):
        raise ConfigError("exactly one ranged parameter, K or N, is supported")

    def passes(value: float) -> bool:
        sub = RunConfig(**{**asdict(cfg), param: value})
        return run_check(sub).passed

    pass_lo, pass_hi = passes(lo), passes(hi)
    extra = {"param": param, "lo": lo, "hi": hi, "resolution": resolution}
    if pass_lo == pass_hi:
        report = Report(
            check=f"sweep:{cfg.check}",
            config=asdict(cfg),
            cases=[{"id": "no-crossing", "margin": 0.0, "passed": pass_lo}],
            min_margin=0.0,
            argmin={"id": "no-crossing"},
            passed=pass_lo,
            extra={**extra, "crossing": None,
                   "note": "entire range passing" if pass_lo else "entire range failing"},
        )
        return report
    # orient the bracket so that `a` passes and `b` fails
    a, b = (lo, hi) if pass_lo else (hi, lo)
    while abs(b - a) > resolution:
        mid = 0.5 * (a + b)
        if passes(mid):
            a = mid
        else:
            b = mid
    crossing = a
    report = Report(
        check=f"sweep:{cfg.check}",
        config=asdict(cfg),
        cases=[{"id": "crossing", "margin": 0.0, "passed": True, param: crossing}],
        min_margin=0.0,
        argmin={"id": "crossing"},
        passed=True,
        extra={**extra, "crossing": crossing},
    )
    return report


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with RunConfig fields; flags override")
    parser.add_argument("--check", help="certifier name (see list-checks)")
    parser.add_argument("--space", help="space descriptor, e.g. model:K=2,N=3")
    parser.add_argument("--model", help="model function, e.g. cos:K=1,N=1")
    parser.add_argument("--K", type=float)
    parser.add_argument("--N", type=float)
    parser.add_argument("--n", type=int)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--pairs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--x0", type=float)
    parser.add_argument("--y0", type=float)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--T", type=float)
    parser.add_argument("--t-points", dest="t_points", type=int)
    parser.add_argument("--z-points", dest="z_points", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--out", help="write the JSON report here")
    parser.add_argument("--csv", dest="csv_out", help="write per-case margins CSV here")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    for key in RunConfig.__dataclass_fields__:
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    if "check" not in base or base["check"] is None:
        raise ConfigError("--check is required")
    try:
        return RunConfig(**base)
    except TypeError as exc:
        raise ConfigError(f"bad configuration: {exc}") from exc


def _emit(report: Report, cfg: RunConfig) -> None:
    text = report.to_json()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    if cfg.csv_out:
        report.write_csv(cfg.csv_out)
    print(text)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cdtk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a certifier once")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="bisect the crossing of a ranged parameter")
    _add_common(p_sweep)
    p_sweep.add_argument("--range", required=True, help="K=lo:hi or N=lo:hi")
    p_sweep.add_argument("--resolution", type=float, default=1e-4)

    sub.add_parser("list-checks", help="list available certifiers")

    p_exp = sub.add_parser("export-space", help="write a space description JSON")
    _add_common(p_exp)

    args = parser.parse_args(argv)
    try:
        if args.command == "list-checks":
            for name in sorted(CHECKS):
                print(f"{name:20s} {CHECKS[name][1]}")
            return 0
        if args.command == "export-space":
            cfg = _config_from_args_allow_nocheck(args)
            space = parse_space(cfg)
            text = mm.space_to_json(space)
            if cfg.out:
                with open(cfg.out, "w") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
            return 0
        cfg = _config_from_args(args)
        if args.command == "run":
            report = run_check(cfg)
            _emit(report, cfg)
            return 0 if report.passed else 1
        if args.command == "sweep":
            param, _, bounds = args.range.partition("=")
            lo_s, _, hi_s = bounds.partition(":")
            try:
                lo, hi = float(lo_s), float(hi_s)
            except ValueError as exc:
                raise ConfigError(f"malformed --range {args.range!r}") from exc
            report = run_sweep(cfg, param, lo, hi, args.resolution)
            _emit(report, cfg)
            return 0 if report.passed else 1
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"cdtk: error: {exc}", file=sys.stderr)
        return 2


def _config_from_args_allow_nocheck(args: argparse.Namespace) -> RunConfig:
    ns = argparse.Namespace(**vars(args))
    if getattr(ns, "check", None) is None:
        ns.check = "export"
    return _config_from_args(ns)


if __name__ == "__main__":
    sys.exit(main())
