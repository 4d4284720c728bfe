r"""Experiment runner: identity checks, envelope checks, oracle comparisons
and norm-ratio sweeps.

An experiment is described by a JSON document (see :class:`ExperimentConfig`
and ``docs/config.md``) and produces a list of :class:`ResultRow`.  Rows are
written to ``results.csv``; the configuration echo, library version and
timings go to ``run.json``.  Wall times are kept out of the CSV so that the
same configuration and seed always give a byte-identical file.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import csv
import io
import json
import math
import os
import time

import numpy as np
from scipy import integrate as _integrate

from .errors import ConetentError, ConfigError
from .fracderiv import (
    FractionalOrder,
    frac_dt_poisson_fourier,
    frac_dt_sw,
    frac_poisson_kernel_real,
    laguerre_profile,
    poisson_apply,
)
from .gammanorm import BanachDescriptor, tent_norm_gamma, thread_count
from .kernels import (
    SettingDescriptor,
    critical_radius_hermite,
    hankel_kernel,
    hankel_transform,
    heat_hermite,
    heat_laguerre,
    poisson_classical_dtm,
)
from .quadrature import gauss_legendre, log_panels_rule, unit_ball_volume
from .sampled import SampledFunction, bump, combine, gaussian, stack
from .specfun import hermite_functions, laguerre_functions
from .tent import ConeParams, _power_tail, aq_functional, build_x_grid, cone_fields, lp_norm, lp_norm_grid, sqfn_profile

__all__ = [
    "EXPERIMENTS",
    "BOUNDS",
    "ExperimentConfig",
    "GridSpec",
    "Tolerances",
    "ResultRow",
    "load_config",
    "make_function",
    "make_family",
    "inner_product",
    "run_experiment",
    "run_identity_check",
    "run_envelope_check",
    "run_oracle_compare",
    "run_ratio_sweep",
    "rows_to_csv",
    "write_outputs",
]

EXPERIMENTS = ("identity", "envelope", "oracle", "ratio-sweep")
PROVENANCE = ("closed-form", "oracle", "paper-identity")

# ---------------------------------------------------------------------------
# configuration


def _reject_unknown(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _number(v, where, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where} must be a finite number")
    if positive and not v > 0:
        raise ConfigError(f"{where} must be positive")
    return float(v)


def _numbers(v, where):
    vals = v if isinstance(v, list) else [v]
    if not vals:
        raise ConfigError(f"{where} must not be empty")
    return tuple(_number(x, where) for x in vals)


def _int(v, where, lo=1):
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(f"{where} must be an integer >= {lo}")
    return v


@dataclass(frozen=True)
class GridSpec:
    """Discretization parameters shared by all experiments.

    ``t_min``/``t_max`` are the cone window relative to the function scale;
    ``env_*`` describe the envelope grid; ``panel`` lists ``(y, t)`` (or
    ``(x, t)`` for the Hankel identity) evaluation points.
    """

    t_min: float = 1e-3
    t_max: float = 1e3
    nodes_per_decade: int = 8
    spatial_nodes: int = 24
    x_panel_nodes: int = 8
    K: int = 64
    mc_samples: int = 10_000
    seed: int = 0
    env_t: tuple = (1e-3, 1e2)
    env_space: tuple = None
    env_nodes: int = 16
    panel: tuple = None

    def cone(self, refine=0):
        try:
            c = ConeParams(self.t_min, self.t_max, self.nodes_per_decade, self.spatial_nodes)
        except ConetentError as exc:
            raise ConfigError(str(exc)) from exc
        return c.refine(refine) if refine else c


_GRID_KEYS = tuple(GridSpec.__dataclass_fields__)


def _parse_grid(d):
    _reject_unknown(d, _GRID_KEYS, "grid")
    kw = {}
    for k in ("t_min", "t_max"):
        if k in d:
            kw[k] = _number(d[k], f"grid.{k}", positive=True)
    for k in ("nodes_per_decade", "spatial_nodes", "x_panel_nodes", "K", "env_nodes"):
        if k in d:
            kw[k] = _int(d[k], f"grid.{k}", 2)
    if "mc_samples" in d:
        kw["mc_samples"] = _int(d["mc_samples"], "grid.mc_samples", 1000)
    if "seed" in d:
        kw["seed"] = _int(d["seed"], "grid.seed", 0)
    for k in ("env_t", "env_space"):
        if k in d:
            v = d[k]
            if not (isinstance(v, list) and len(v) == 2):
                raise ConfigError(f"grid.{k} must be a two-element list")
            lo, hi = (_number(x, f"grid.{k}") for x in v)
            if not lo < hi:
                raise ConfigError(f"grid.{k} is a degenerate window")
            kw[k] = (lo, hi)
    if "env_t" in kw and not kw["env_t"][0] > 0:
        raise ConfigError("grid.env_t must be positive")
    if "panel" in d:
        pts = d["panel"]
        if not (isinstance(pts, list) and pts and all(isinstance(p, list) and len(p) == 2 for p in pts)):
            raise ConfigError("grid.panel must be a list of [point, t] pairs")
        kw["panel"] = tuple((_number(a, "grid.panel"), _number(b, "grid.panel", positive=True)) for a, b in pts)
    return GridSpec(**kw)


@dataclass(frozen=True)
class Tolerances:
    rel: float = None
    abs: float = 1e-10
    drift: float = None

    def __post_init__(self):
        for k in ("rel", "abs", "drift"):
            v = getattr(self, k)
            if v is not None and not v > 0:
                raise ConfigError("all tolerances must be positive")


_DEFAULT_TOL = {
    "identity": Tolerances(rel=1e-3),
    "envelope": Tolerances(drift=0.05),
    "oracle": Tolerances(rel=1e-5),
    "ratio-sweep": Tolerances(rel=1e-3, drift=0.10),
}

_FUNCTION_KEYS = {
    "gaussian": ("center", "width"),
    "bump": ("center", "radius"),
    "hermite-mode": ("modes",),
    "laguerre-mode": ("alpha", "modes"),
}
_FAMILY_KEYS = ("dilates", "translates", "scales")


def _check_function(d, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    if "components" in d:
        _reject_unknown(d, ("components",) + _FAMILY_KEYS, where)
        comps = d["components"]
        if not (isinstance(comps, list) and comps):
            raise ConfigError(f"{where}.components must be a nonempty list")
        for i, c in enumerate(comps):
            if any(k in c for k in ("components",) + _FAMILY_KEYS):
                raise ConfigError(f"{where}.components[{i}] must be a plain function")
            _check_function(c, f"{where}.components[{i}]")
    else:
        kind = d.get("kind")
        if kind not in _FUNCTION_KEYS:
            raise ConfigError(f"{where}.kind must be one of {', '.join(_FUNCTION_KEYS)}")
        _reject_unknown(d, ("kind",) + _FUNCTION_KEYS[kind] + _FAMILY_KEYS, where)
        if kind in ("hermite-mode", "laguerre-mode"):
            modes = d.get("modes")
            if not (isinstance(modes, list) and modes and all(isinstance(m, list) and len(m) == 2 for m in modes)):
                raise ConfigError(f"{where}.modes must be a nonempty list of [k, coefficient]")
            for k, c in modes:
                _int(k, f"{where}.modes index", 0)
                _number(c, f"{where}.modes coefficient")
        for k in ("center", "width", "radius", "alpha"):
            if k in d:
                _number(d[k], f"{where}.{k}", positive=k != "center")
    for k in ("dilates", "translates", "scales"):
        if k in d:
            vals = _numbers(d[k], f"{where}.{k}")
            if k != "translates" and any(v <= 0 for v in vals):
                raise ConfigError(f"{where}.{k} must be positive")
    return d


_TOP_KEYS = ("experiment", "setting", "beta", "p", "banach", "grid", "functions", "pair", "bounds", "tolerances")


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description.

    Build it with :meth:`from_dict` or :func:`load_config`; every level of
    the document rejects unknown keys.
    """

    experiment: str
    setting: SettingDescriptor
    betas: tuple
    ps: tuple = (2.0,)
    banach: BanachDescriptor = None
    grid: GridSpec = GridSpec()
    functions: dict = None
    pair: dict = None
    bounds: tuple = ()
    tolerances: Tolerances = Tolerances()
    raw: dict = field(default=None, compare=False, repr=False)

    @classmethod
    def from_dict(cls, d):
        _reject_unknown(d, _TOP_KEYS, "config")
        exp = d.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
        setting = _parse_setting(d.get("setting"), required=exp != "envelope")
        if "beta" not in d:
            raise ConfigError("beta is required")
        betas = _numbers(d["beta"], "beta")
        if any(b <= 0 for b in betas):
            raise ConfigError("beta must be positive")
        ps = _numbers(d.get("p", 2.0), "p")
        if any(not p > 1 for p in ps):
            raise ConfigError("p must exceed 1")
        banach = None
        if "banach" in d:
            b = d["banach"]
            _reject_unknown(b, ("d", "q"), "banach")
            q = b.get("q", 2.0)
            q = math.inf if q == "inf" else _number(q, "banach.q")
            try:
                banach = BanachDescriptor(_int(b.get("d"), "banach.d"), q)
            except ConetentError as exc:
                raise ConfigError(str(exc)) from exc
        grid = _parse_grid(d.get("grid", {}))
        funcs = d.get("functions")
        if funcs is None and exp in ("identity", "oracle", "ratio-sweep"):
            raise ConfigError("functions is required for this experiment")
        if funcs is not None:
            _check_function(funcs, "functions")
        pair = d.get("pair")
        if pair is not None:
            if exp != "identity":
                raise ConfigError("pair is only used by identity checks")
            _check_function(pair, "pair")
        bounds = ()
        if "bounds" in d:
            if exp != "envelope":
                raise ConfigError("bounds are only used by envelope checks")
            bounds = tuple(_parse_bound(b) for b in d["bounds"])
        elif exp == "envelope":
            bounds = tuple({"bound": b} for b in BOUNDS)
        tol = _DEFAULT_TOL[exp]
        if "tolerances" in d:
            t = d["tolerances"]
            _reject_unknown(t, ("rel", "abs", "drift"), "tolerances")
            tol = replace(tol, **{k: _number(v, f"tolerances.{k}") for k, v in t.items()})
        return cls(exp, setting, betas, ps, banach, grid, funcs, pair, bounds, tol, raw=d)


def _parse_setting(d, required=True):
    if d is None:
        if required:
            raise ConfigError("setting is required")
        return None
    _reject_unknown(d, ("family", "n", "lam", "alpha"), "setting")
    fam = d.get("family")
    try:
        if fam in ("classical", "hermite"):
            _reject_unknown(d, ("family", "n"), "setting")
            return SettingDescriptor(fam, n=_int(d.get("n", 1), "setting.n"))
        if fam == "bessel":
            _reject_unknown(d, ("family", "lam"), "setting")
            return SettingDescriptor.bessel(_number(d.get("lam"), "setting.lam", positive=True))
        if fam == "laguerre":
            _reject_unknown(d, ("family", "alpha"), "setting")
            return SettingDescriptor.laguerre(_number(d.get("alpha"), "setting.alpha", positive=True))
    except ConetentError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError("setting.family must be classical, hermite, bessel or laguerre")


def _parse_bound(b):
    if isinstance(b, str):
        b = {"bound": b}
    _reject_unknown(b, ("bound", "beta", "lam", "alpha"), "bounds entry")
    if b.get("bound") not in BOUNDS:
        raise ConfigError(f"bound must be one of {', '.join(BOUNDS)}")
    for k in ("beta", "lam", "alpha"):
        if k in b:
            _number(b[k], f"bounds.{k}", positive=True)
    return dict(b)


def load_config(path, seed=None):
    """Read and validate a JSON configuration; ``seed`` overrides ``grid.seed``."""
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if seed is not None:
        if not isinstance(d, dict):
            raise ConfigError("config must be an object")
        d = dict(d)
        d["grid"] = dict(d.get("grid", {}), seed=int(seed))
    return ExperimentConfig.from_dict(d)


# ---------------------------------------------------------------------------
# function families


def _mode_function(kind, modes, alpha=None):
    ks = [int(k) for k, _ in modes]
    cs = np.array([float(c) for _, c in modes])
    kmax = max(ks)
    if kind == "hermite-mode":
        R = math.sqrt(2 * kmax + 1) + 8.0
        support = (-R, R)
        basis = lambda x: hermite_functions(kmax, x)
    else:
        R = math.sqrt(4 * kmax + 2 * alpha + 2) + 8.0
        support = (0.0, R)

        def basis(x):
            x = np.asarray(x, dtype=float)
            pos = np.maximum(x, 1e-300)
            return np.where(x > 0, laguerre_functions(alpha, kmax, pos), 0.0)

    func = lambda x: np.tensordot(cs, basis(x)[ks], axes=1)
    label = "+".join(f"{c:g}*{'h' if kind == 'hermite-mode' else 'phi'}{k}" for k, c in zip(ks, cs))
    scale = 1.0 / math.sqrt(2 * kmax + 2)
    return SampledFunction.from_callable(func, support, n=801, scale=scale, label=label)


def make_function(spec):
    """The base function described by a function spec (no family expansion)."""
    if "components" in spec:
        parts = [make_function(c) for c in spec["components"]]
        return stack(parts, label="[" + ",".join(p.label for p in parts) + "]")
    kind = spec["kind"]
    if kind == "gaussian":
        return gaussian(spec.get("center", 0.0), spec.get("width", 1.0))
    if kind == "bump":
        return bump(spec.get("center", 0.0), spec.get("radius", 1.0))
    return _mode_function(kind, spec["modes"], spec.get("alpha", 1.0))


def make_family(spec):
    """``[(descriptor, function)]``: every combination of dilate, translate and scale."""
    base = make_function(spec)
    out = []
    for d in spec.get("dilates", [1.0]):
        for h in spec.get("translates", [0.0]):
            for c in spec.get("scales", [1.0]):
                f = base
                if d != 1.0:
                    f = f.dilate(d)
                if h != 0.0:
                    f = f.translate(h)
                if c != 1.0:
                    f = f.scaled(c)
                out.append((f"{base.label}|dil={d!r}|tr={h!r}|c={c!r}", f))
    return out


def inner_product(f, g):
    r""":math:`\int f g` over the union of supports (composite Gauss)."""
    a = min(f.support[0], g.support[0])
    b = max(f.support[1], g.support[1])
    width = min(f.scale, g.scale) / 4.0
    panels = max(8, int(math.ceil((b - a) / width)))
    e = np.linspace(a, b, panels + 1)
    x, w = gauss_legendre(16, e[:-1], e[1:])
    x, w = x.ravel(), w.ravel()
    fx, gx = f(x), g(x)
    if fx.ndim > 1:
        return float(np.sum(w[:, None] * fx * gx))
    return float(np.sum(w * fx * gx))


# ---------------------------------------------------------------------------
# result rows


@dataclass(frozen=True)
class ResultRow:
    """One reported quantity.

    ``reference`` is ``None`` when there is nothing to compare with; then
    ``provenance`` is empty and ``passed`` is ``None``.  ``tolerance``
    applies to ``rel_err`` unless ``tol_kind`` is ``"abs"``.
    """

    experiment: str
    descriptor: str
    quantity: str
    value: float
    reference: float = None
    abs_err: float = None
    rel_err: float = None
    stderr: float = None
    tolerance: float = None
    tol_kind: str = "rel"
    passed: bool = None
    provenance: str = ""
    note: str = ""
    wall_time: float = 0.0

    def __post_init__(self):
        if self.provenance and self.provenance not in PROVENANCE:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.reference is not None and not self.provenance:
            raise ValueError("a reference value needs a provenance label")
        for k in ("abs_err", "rel_err"):
            v = getattr(self, k)
            if v is not None and v < 0:
                raise ValueError("errors must be nonnegative")


def _row(exp, desc, qty, value, reference=None, provenance="", tolerance=None, tol_kind="rel", stderr=None, abs_err=None, note="", wall=0.0):
    rel = None
    if reference is not None:
        if abs_err is None:
            abs_err = abs(value - reference)
        rel = abs_err / abs(reference) if reference != 0 else None
    passed = None
    if tolerance is not None:
        err = abs_err if tol_kind == "abs" else rel
        passed = bool(err is not None and math.isfinite(value) and err <= tolerance)
    return ResultRow(exp, desc, qty, float(value), None if reference is None else float(reference),
                     None if abs_err is None else float(abs_err), rel, stderr, tolerance, tol_kind,
                     passed, provenance, note, wall)


def _failure_row(exp, desc, qty, exc, wall=0.0):
    return ResultRow(exp, desc, qty, math.nan, passed=False, note=f"{type(exc).__name__}: {exc}", wall_time=wall)


def _parallel(fn, items):
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def _timed(fn, exp, desc, qty):
    """Run ``fn() -> list of rows``; turn library failures into a failed row."""
    t0 = time.perf_counter()
    try:
        rows = fn()
    except ConetentError as exc:
        return [_failure_row(exp, desc, qty, exc, time.perf_counter() - t0)]
    wall = time.perf_counter() - t0
    return [replace(r, wall_time=wall) for r in rows]


def _sorted(rows):
    return sorted(rows, key=lambda r: (r.descriptor, r.quantity))


# ---------------------------------------------------------------------------
# identity checks


def _identity_constant(setting, beta):
    """Identity constant and its phase for the given setting."""
    c = math.gamma(2 * beta) / 2 ** (2 * beta)
    if setting.family == "classical":
        return unit_ball_volume(setting.n) * c, 1.0
    return c, complex(math.cos(2 * math.pi * beta), math.sin(2 * math.pi * beta))


def _x_nodes(grid, refine):
    # apex grid refinement: 1.5x nodes per panel per step
    return int(round(grid.x_panel_nodes * 1.5 ** refine))


def _classical_pairing(setting, beta, f, g, cone, x_panel_nodes, same):
    """:math:`\\int\\int_{\\Gamma(x)} u_f\\bar u_g\\,dy\\,dt/t^2\\,dx` by polarization."""

    def energy(h):
        xg = build_x_grid(h.support, h.scale, False, panel_nodes=x_panel_nodes)
        vals = sqfn_profile(setting, beta, h, xg, cone)
        return lp_norm_grid(vals, xg, 2.0) ** 2

    if same:
        return energy(f)
    return 0.25 * (energy(combine(f, g, 1.0, 1.0)) - energy(combine(f, g, 1.0, -1.0)))


def _halfline_y_rule(lo, hi, scale, t, far=20.0):
    # uniform panels over [lo, hi], geometric panels out to hi + far * max(t, scale)
    panels = max(4, int(math.ceil((hi - lo) / (scale / 2.0))))
    e = np.linspace(lo, hi, panels + 1)
    top = hi + far * max(t, scale) if far else hi
    n_geo = int(math.ceil(math.log2(top / hi)))
    e = np.concatenate([e, hi * 2.0 ** np.arange(1, n_geo + 1)])
    y, w = gauss_legendre(16, e[:-1], e[1:])
    return y.ravel(), w.ravel()


def _halfline_pairing(setting, beta, f, g, cone, K, route):
    r""":math:`\int_0^\infty\int_0^\infty u_f u_g\,dy\,dt/t` with power-law height tails.

    The cone measure :math:`dy\,dt/(t|J_t(y)|)` with the outer integral
    over apexes collapses to this form once the apex integral is done.
    """
    scale = min(f.scale, g.scale)
    lo = 0.0
    hi = max(f.support[1], g.support[1])
    t_lo = 10.0 ** math.floor(math.log10(cone.t_min * scale))
    t_hi = 10.0 ** math.ceil(math.log10(cone.t_max * max(scale, hi)))
    # the laguerre height profile decays like exp(-2 t sqrt(lambda)) within a decade
    npd = cone.nodes_per_decade * (2 if setting.family == "laguerre" else 1)
    tn, wt = log_panels_rule(t_lo, t_hi, npd)
    if setting.family == "laguerre":
        prof_f = laguerre_profile(f, setting.alpha, K)
        prof_g = prof_f if g is f else laguerre_profile(g, setting.alpha, K)
        y, wy = _halfline_y_rule(lo, hi, scale, 0.0, far=0.0)
        Y, T = np.meshgrid(y, tn, indexing="ij")
        uf = poisson_apply(setting, beta, f, Y, T, route="spectral", profile=prof_f)
        ug = uf if g is f else poisson_apply(setting, beta, g, Y, T, route="spectral", profile=prof_g)
        dens = np.sum(wy[:, None] * uf * ug, axis=0)
    else:
        dens = np.empty(tn.size, dtype=complex)
        for i, t in enumerate(tn):
            y, wy = _halfline_y_rule(lo, hi, scale, t)
            tt = np.full_like(y, t)
            uf = poisson_apply(setting, beta, f, y, tt, route=route)
            ug = uf if g is f else poisson_apply(setting, beta, g, y, tt, route=route)
            dens[i] = np.sum(wy * uf * ug)
    core = complex(np.sum(wt * dens))
    # slab densities per unit log t; the tails are continued as power laws
    rho = np.abs(dens)
    phase = dens[np.argmax(rho)] / rho.max() if rho.max() > 0 else 1.0
    extra = _power_tail(tn[0], tn[1], rho[0], rho[1], t_lo, False)
    extra += _power_tail(tn[-2], tn[-1], rho[-2], rho[-1], t_hi, True)
    return core + phase * extra


def run_identity_check(config, refine=0):
    """LHS and RHS of the polarization identity for every ``beta``.

    Classical settings use the double cone/apex integral with the Hermitian
    pairing; half-line settings the bilinear pairing whose constant carries
    the phase :math:`e^{2i\\pi\\beta}`.  Both sides and their ratio are
    reported; a pair with zero right-hand side is checked in absolute terms.
    """
    setting = config.setting
    if setting.family not in ("classical", "bessel", "laguerre"):
        raise ConfigError("identity checks apply to classical, bessel and laguerre settings")
    if setting.family == "classical" and setting.n != 1:
        raise ConfigError("classical identity checks are one-dimensional")
    exp = "identity"
    f_fam = make_family(config.functions)
    g_fam = make_family(config.pair) if config.pair is not None else f_fam
    if len(f_fam) != len(g_fam):
        raise ConfigError("functions and pair must describe families of the same size")
    cone = config.grid.cone(refine)
    route = "hankel" if setting.family == "bessel" else "auto"
    tol = config.tolerances
    jobs = [(beta, fd, f, gd, g) for beta in config.betas for (fd, f), (gd, g) in zip(f_fam, g_fam)]

    def job(item):
        beta, fd, f, gd, g = item
        same = config.pair is None or fd == gd and config.pair == config.functions
        desc = f"{setting.describe()}|beta={beta!r}|f={fd}|g={gd if not same else fd}|refine={refine}"

        def work():
            const, phase = _identity_constant(setting, beta)
            fg = inner_product(f, g)
            if setting.family == "classical":
                lhs = _classical_pairing(setting, beta, f, g, cone, _x_nodes(config.grid, refine), same)
            else:
                lhs = _halfline_pairing(setting, beta, f, f if same else g, cone, config.grid.K, route)
            # report dephased values; any leftover imaginary part counts as error
            lhs_r = complex(lhs / phase)
            rhs_r = const * fg
            scale_ref = const * math.sqrt(inner_product(f, f) * inner_product(g, g))
            out = [
                _row(exp, desc, "lhs", lhs_r.real, abs_err=None, note="dephased" if phase != 1.0 else ""),
                _row(exp, desc, "rhs", rhs_r, note="dephased" if phase != 1.0 else ""),
            ]
            if abs(rhs_r) <= tol.abs * max(1.0, scale_ref):
                out[0] = _row(exp, desc, "lhs", lhs_r.real, 0.0, "paper-identity", tol.abs, "abs", abs_err=abs(lhs_r))
                out[1] = _row(exp, desc, "rhs", rhs_r, 0.0, "closed-form", tol.abs, "abs")
            else:
                ratio = lhs_r / rhs_r
                out.append(_row(exp, desc, "lhs/rhs", ratio.real, 1.0, "paper-identity", tol.rel, abs_err=abs(ratio - 1.0)))
            return out

        return _timed(work, exp, desc, "lhs/rhs")

    return _sorted([r for rows in _parallel(job, jobs) for r in rows])


# ---------------------------------------------------------------------------
# envelope checks


def _classical_dz_real(beta, t, z):
    r"""Dephased :math:`\partial_z\,t^\beta\partial_t^\beta P_t(z)` on the line."""
    w = (t + 1j * z) ** (-beta - 2.0)
    return math.gamma(beta + 1.0) / math.pi * t ** beta * np.real(-(beta + 1.0) * 1j * w)


def _log_ratio_heat_hermite(t, x, y):
    return heat_hermite(1, t, x, y, log=True) + 0.5 * np.log(t) + (x - y) ** 2 / (4 * t)


_LAGUERRE_HEAT_C = 0.125


def _bound_hermite_kernel(beta):
    s = SettingDescriptor.hermite(1)

    def ratio(t, z, y):
        k = frac_poisson_kernel_real(s, beta, t, z, y)
        return np.abs(k) * (t + np.abs(y - z)) ** (beta + 2.0) / (t ** beta * critical_radius_hermite(y))

    return ratio


def _bound_bessel_kernel(lam, beta):
    s = SettingDescriptor.bessel(lam)

    def ratio(t, x, y):
        k = frac_poisson_kernel_real(s, beta, t, x, y)
        return np.abs(k) * (t + np.abs(x - y)) ** (beta + 1.0) / t ** beta

    return ratio


def _bound_classical_kernel(beta):
    s = SettingDescriptor.classical(1)

    def ratio(t, x, y):
        k = frac_poisson_kernel_real(s, beta, t, x, y)
        return np.abs(k) * (t + np.abs(x - y)) ** (beta + 1.0) / t ** beta

    return ratio


def _bound_classical_gradient(beta):
    def ratio(t, y, z):
        d = _classical_dz_real(beta, t, y - z)
        return np.abs(d) * (t + np.abs(y - z)) ** (beta + 2.0) / t ** beta

    return ratio


def _bound_laguerre_heat(alpha):
    def ratio(t, x, y):
        lv = heat_laguerre(alpha, t, x, y, log=True) + 0.5 * np.log(t) + _LAGUERRE_HEAT_C * (x - y) ** 2 / t
        return np.exp(lv)

    return ratio


#: Envelope bounds by name: (half-line?, uses beta?, description).
BOUNDS = {
    "classical-kernel": (False, True, "|t^b d^b P_t(x-y)| (t+|x-y|)^(1+b) / t^b"),
    "classical-gradient": (False, True, "|d_y t^b d^b P_t(y-z)| (t+|y-z|)^(2+b) / t^b"),
    "hermite-heat": (False, False, "W_t(x,y) t^(1/2) exp(|x-y|^2/4t)"),
    "hermite-kernel": (False, True, "|t^b d^b P_t(z,y)| (t+|y-z|)^(2+b) / (t^b rho(y))"),
    "bessel-kernel": (True, True, "|t^b d^b P_t(x,y)| (t+|x-y|)^(1+b) / t^b"),
    "laguerre-heat": (True, False, "W_t(x,y) t^(1/2) exp(c (x-y)^2/t), c = 1/8"),
}


def _bound_function(name, beta, lam, alpha):
    if name == "classical-kernel":
        return _bound_classical_kernel(beta)
    if name == "classical-gradient":
        return _bound_classical_gradient(beta)
    if name == "hermite-heat":
        return lambda t, x, y: np.exp(_log_ratio_heat_hermite(t, x, y))
    if name == "hermite-kernel":
        return _bound_hermite_kernel(beta)
    if name == "bessel-kernel":
        return _bound_bessel_kernel(lam, beta)
    return _bound_laguerre_heat(alpha)


def _envelope_sup(fn, t_win, space, n, chunk=1024):
    t = np.geomspace(t_win[0], t_win[1], n)
    s = np.linspace(space[0], space[1], n)
    T, X, Y = (a.ravel() for a in np.meshgrid(t, s, s, indexing="ij"))
    best = -math.inf
    for lo in range(0, T.size, chunk):
        sl = slice(lo, lo + chunk)
        r = np.asarray(fn(T[sl], X[sl], Y[sl]), dtype=float)
        if not np.all(np.isfinite(r)):
            return math.inf
        best = max(best, float(r.max()))
    return best


def run_envelope_check(config, refine=0):
    """Grid supremum of each kernel quantity over its envelope, and its drift.

    The grid is ``env_nodes`` points per axis (geometric in ``t``, uniform
    in space); the refinement step uses ``2 * env_nodes - 1`` points, which
    contains the coarse grid.  A bound is flagged when the supremum is not
    finite or moves by more than the drift tolerance.
    """
    g = config.grid
    if not g.env_t[0] < g.env_t[1]:
        raise ConfigError("degenerate envelope window")
    n0 = (g.env_nodes - 1) * 2 ** refine + 1
    n1 = 2 * n0 - 1
    exp = "envelope"
    setting = config.setting
    lam_default = setting.lam if setting is not None and setting.family == "bessel" else 1.5
    alpha_default = setting.alpha if setting is not None and setting.family == "laguerre" else 1.0
    jobs = []
    for b in config.bounds:
        name = b["bound"]
        halfline, uses_beta, _ = BOUNDS[name]
        betas = (b["beta"],) if "beta" in b else (config.betas if uses_beta else (None,))
        for beta in betas:
            jobs.append((name, halfline, beta, b.get("lam", lam_default), b.get("alpha", alpha_default)))

    def job(item):
        name, halfline, beta, lam, alpha = item
        space = g.env_space or ((0.05, 5.0) if halfline else (-5.0, 5.0))
        if halfline and space[0] <= 0:
            raise ConfigError("half-line envelope windows must start above 0")
        parts = [name]
        if beta is not None:
            parts.append(f"beta={beta!r}")
        if name == "bessel-kernel":
            parts.append(f"lam={lam!r}")
        if name == "laguerre-heat":
            parts.append(f"alpha={alpha!r}")
        desc = "|".join(parts) + f"|nodes={n0}"

        def work():
            fn = _bound_function(name, beta, lam, alpha)
            s0 = _envelope_sup(fn, g.env_t, space, n0)
            s1 = _envelope_sup(fn, g.env_t, space, n1)
            finite = math.isfinite(s0) and math.isfinite(s1)
            drift = abs(s1 - s0) / s1 if finite and s1 > 0 else math.inf
            return [
                _row(exp, desc, "sup", s0),
                _row(exp, desc, "sup_refined", s1),
                _row(exp, desc, "drift", drift, 0.0, "oracle", config.tolerances.drift, "abs",
                     note="" if finite else "supremum not finite"),
            ]

        return _timed(work, exp, desc, "drift")

    return _sorted([r for rows in _parallel(job, jobs) for r in rows])


# ---------------------------------------------------------------------------
# oracle comparisons


_DEFAULT_PANEL = ((-1.0, 0.1), (-0.3, 0.3), (0.2, 0.5), (0.7, 1.0), (1.5, 2.0))
_DEFAULT_HALF_PANEL = ((0.4, 0.1), (0.9, 0.3), (1.3, 0.5), (1.8, 1.0), (2.5, 2.0))
_DEFAULT_HANKEL_PANEL = ((1.0, 0.5), (2.0, 0.5), (1.0, 1.0), (2.0, 1.0))


def classical_sw_apply(beta, f, y, t, nodes=48):
    r""":math:`\partial_t^\beta P_t(f)(y)` by the defining integral in time.

    The time derivatives :math:`\partial_\tau^m P_\tau(f)(y)` come from the
    closed kernel derivatives integrated against ``f`` with a rule graded
    toward ``y`` at scale ``t`` (valid for every :math:`\tau \ge t`).
    """
    from .fracderiv import _z_rule

    order = FractionalOrder(beta)
    a, b = f.support
    z, w = _z_rule(a, b, np.array([y]), np.array([t]), f.scale / 4.0, 16)
    z, w = z[0], w[0]
    wf = w * f(z)

    def F(tau, m):
        tau = np.asarray(tau, dtype=float)
        return poisson_classical_dtm(1, m, tau[..., None], y - z) @ wf

    reach = abs(y - 0.5 * (a + b)) + 0.5 * (b - a)
    return frac_dt_sw(F, order, t, tol=1e-11, decay=("algebraic", order.m + 1.0), scale=t + reach, nodes=nodes)


def hankel_symbol_lhs(lam, beta, f, t, xs, Y=40.0, per_pi=10):
    r"""Hankel transform of :math:`u(\cdot,t) = t^\beta\partial_t^\beta P_t(f)` at ``xs``.

    ``u`` is computed by the kernel route on ``[0, Y]``.  Beyond ``Y`` it is
    continued as the power law through ``u(0.8 Y)`` and ``u(Y)``, and the
    Bessel factor is replaced by its leading asymptotic
    :math:`\sqrt{2/\pi}\cos(xy - \lambda\pi/2)`.
    """
    setting = SettingDescriptor.bessel(lam)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    panels = int(math.ceil(Y * xs.max() / math.pi * per_pi / 8))
    e = np.linspace(0.0, Y, panels + 1)
    y, w = gauss_legendre(16, e[:-1], e[1:])
    y, w = y.ravel(), w.ravel()
    u = poisson_apply(setting, beta, f, y, np.full_like(y, t), route="kernel")
    ya, yb = 0.8 * Y, Y
    ua, ub = poisson_apply(setting, beta, f, np.array([ya, yb]), np.array([t, t]), route="kernel")
    gam = math.log(abs(ub / ua)) / math.log(yb / ya)
    amp = ub * yb ** (-gam)
    out = np.empty(xs.size, dtype=complex)
    c, s = math.cos(lam * math.pi / 2), math.sin(lam * math.pi / 2)
    for i, x in enumerate(xs):
        arg = x * y
        head = np.sum(w * hankel_kernel(lam, arg) * u)
        ic, _ = _integrate.quad(lambda r: r ** gam, Y, np.inf, weight="cos", wvar=x)
        is_, _ = _integrate.quad(lambda r: r ** gam, Y, np.inf, weight="sin", wvar=x)
        out[i] = head + amp * math.sqrt(2 / math.pi) * (c * ic + s * is_)
    return out


def _oracle_pairs(setting, beta, f, panel, K):
    """``[(descriptor suffix, value, reference, provenance)]`` for the setting."""
    ys = [float(p[0]) for p in panel]
    ts = [float(p[1]) for p in panel]
    fam = setting.family
    out = []
    if fam == "classical":
        if setting.n != 1:
            raise ConfigError("classical oracle comparisons are one-dimensional")
        for y, t in zip(ys, ts):
            ref = complex(frac_dt_poisson_fourier(f, beta, t, y))
            sw = classical_sw_apply(beta, f, y, t)
            ker = complex(poisson_apply(setting, beta, f, np.array([y]), np.array([t]))[0]) / t ** beta
            out.append((f"y={y!r}|t={t!r}", "sw vs fourier", sw, ref))
            out.append((f"y={y!r}|t={t!r}", "kernel vs fourier", ker, ref))
    elif fam in ("hermite", "laguerre"):
        spec = poisson_apply(setting, beta, f, np.array(ys), np.array(ts), route="spectral", K=K)
        ker = poisson_apply(setting, beta, f, np.array(ys), np.array(ts), route="kernel")
        for y, t, a, b in zip(ys, ts, ker, spec):
            out.append((f"y={y!r}|t={t!r}|K={K}", "subordination vs spectral", complex(a), complex(b)))
    else:
        for t in sorted(set(ts)):
            xs = [y for y, tt in zip(ys, ts) if tt == t]
            xa = np.array(xs)
            lhs = hankel_symbol_lhs(setting.lam, beta, f, t, xa)
            sym = np.exp(1j * math.pi * beta) * (t * xa) ** beta * np.exp(-t * xa) * hankel_transform(setting.lam, f, xa)
            for x, a, b in zip(xs, lhs, sym):
                out.append((f"x={x!r}|t={t!r}", "hankel(u) vs symbol", complex(a), complex(b)))
    return out


def run_oracle_compare(config, refine=0):
    """Pairwise deviations of independent evaluation routes on a point panel.

    Classical: time-integral definition and the kernel route against the
    Fourier symbol.  Hermite and Laguerre: subordinated kernels against the
    eigen expansion.  Bessel: the Hankel transform of the computed
    transform against the multiplier identity.  Values are compared after
    removing the common phase :math:`e^{i\\pi\\beta}`.
    """
    setting = config.setting
    exp = "oracle"
    panel = config.grid.panel or (
        _DEFAULT_HANKEL_PANEL if setting.family == "bessel"
        else _DEFAULT_HALF_PANEL if setting.halfline else _DEFAULT_PANEL
    )
    K = config.grid.K * 2 ** refine
    jobs = [(beta, fd, f) for beta in config.betas for fd, f in make_family(config.functions)]
    tol = config.tolerances.rel

    def job(item):
        beta, fd, f = item
        desc = f"{setting.describe()}|beta={beta!r}|f={fd}"

        def work():
            rows, devs = [], {}
            ph = complex(math.cos(math.pi * beta), -math.sin(math.pi * beta))
            for sub, qty, a, b in _oracle_pairs(setting, beta, f, panel, K):
                a, b = a * ph, b * ph
                err = abs(a - b)
                rows.append(_row(exp, f"{desc}|{sub}", qty, a.real, b.real, "oracle", tol, abs_err=err))
                devs[qty] = max(devs.get(qty, 0.0), err / abs(b) if b != 0 else (0.0 if err == 0 else math.inf))
            for qty, d in devs.items():
                rows.append(_row(exp, desc, f"max rel dev {qty}", d, 0.0, "oracle", tol, "abs"))
            return rows

        return _timed(work, exp, desc, "max rel dev")

    return _sorted([r for rows in _parallel(job, jobs) for r in rows])


# ---------------------------------------------------------------------------
# ratio sweeps


def _member_norms(setting, beta, f, cone, ps, banach, x_panel_nodes, samples, seed):
    """``{p: (||Sf||_p, ||f||_p, stderr)}`` plus the gamma variant for vector inputs."""
    xg = build_x_grid(f.support, f.scale, setting.halfline, panel_nodes=x_panel_nodes)
    if f.dim == 1:
        vals = sqfn_profile(setting, beta, f, xg, cone)
        return {p: (lp_norm_grid(vals, xg, p), lp_norm(f, p), None) for p in ps}, None
    q = banach.q
    # no height extrapolation, so the naive and gamma routes see the same nodes
    fields = cone_fields(setting, beta, f, xg.nodes, replace(cone, extrapolate=False))
    naive = np.array([aq_functional(fl, 2.0, q) for fl in fields])
    out, gam = {}, {}
    for i, p in enumerate(ps):
        fn = lp_norm(f, p, q)
        out[p] = (lp_norm_grid(naive, xg, p), fn, None)
        val, se = tent_norm_gamma(fields, banach, p, xg, samples, seed + i)
        gam[p] = (val, fn, se)
    return out, gam


def run_ratio_sweep(config, refine=0):
    """Norm ratios :math:`\\|S_\\beta f\\|_p/\\|f\\|_p` over a function family.

    Each member is evaluated at the base resolution and one refinement
    step.  Family rows report the minimum, maximum and max/min spread of
    the ratio and the relative change of the spread under refinement.  At
    ``p = 2`` in the classical setting every ratio is compared with the
    square root of the polarization constant.  Vector families with a
    Banach descriptor also report the Gaussian tent norm; in a Hilbert
    range it must agree with the naive vector square function.
    """
    setting = config.setting
    exp = "ratio-sweep"
    family = make_family(config.functions)
    if len(family) < 2:
        raise ConfigError("a ratio sweep needs a family of at least two functions")
    vector = family[0][1].dim > 1
    if vector and (config.banach is None or config.banach.d != family[0][1].dim):
        raise ConfigError("vector families need a banach descriptor of matching dimension")
    cones = (config.grid.cone(refine), config.grid.cone(refine + 1))
    xpns = (_x_nodes(config.grid, refine), _x_nodes(config.grid, refine + 1))
    tol = config.tolerances
    ps = config.ps
    jobs = [(beta, lvl, i) for beta in config.betas for lvl in (0, 1) for i in range(len(family))]

    def job(item):
        beta, lvl, i = item
        fd, f = family[i]
        t0 = time.perf_counter()
        try:
            res = _member_norms(setting, beta, f, cones[lvl], ps, config.banach, xpns[lvl], config.grid.mc_samples, config.grid.seed + i)
            return item, res, None, time.perf_counter() - t0
        except ConetentError as exc:
            return item, None, exc, time.perf_counter() - t0

    results = {r[0]: r[1:] for r in _parallel(job, jobs)}
    rows = []
    for beta in config.betas:
        const = math.sqrt(unit_ball_volume(1) * math.gamma(2 * beta) / 2 ** (2 * beta))
        spread = {}
        for i, (fd, f) in enumerate(family):
            res, exc, wall = results[(beta, 0, i)]
            desc = f"{setting.describe()}|beta={beta!r}|f={fd}"
            if exc is not None:
                rows.append(_failure_row(exp, desc, "ratio", exc, wall))
                continue
            plain, gam = res
            for p in ps:
                s, fn, _ = plain[p]
                ratio = s / fn
                qty = f"ratio p={p!r}" + (" naive" if vector else "")
                if p == 2.0 and setting.family == "classical" and not vector:
                    rows.append(_row(exp, desc, qty, ratio, const, "paper-identity", tol.rel, wall=wall))
                else:
                    rows.append(_row(exp, desc, qty, ratio, wall=wall))
                spread.setdefault((p, 0), []).append(ratio)
                if gam is not None:
                    gv, _, se = gam[p]
                    gq = f"ratio p={p!r} gamma"
                    if config.banach.hilbert:
                        rows.append(_row(exp, desc, gq, gv / fn, ratio, "closed-form", 1e-10, stderr=0.0))
                    else:
                        rows.append(_row(exp, desc, gq, gv / fn, stderr=se / fn))
            r1, exc1, _ = results[(beta, 1, i)]
            if exc1 is None:
                for p in ps:
                    s, fn, _ = r1[0][p]
                    spread.setdefault((p, 1), []).append(s / fn)
        for p in ps:
            desc = f"family|{setting.describe()}|beta={beta!r}|p={p!r}"
            r0 = np.array(spread.get((p, 0), []))
            r1 = np.array(spread.get((p, 1), []))
            if r0.size != len(family) or r1.size != len(family):
                rows.append(_failure_row(exp, desc, "spread drift", ConfigError("family members failed")))
                continue
            s0, s1 = r0.max() / r0.min(), r1.max() / r1.min()
            drift = abs(s1 / s0 - 1.0)
            rows += [
                _row(exp, desc, "ratio min", float(r0.min())),
                _row(exp, desc, "ratio max", float(r0.max())),
                _row(exp, desc, "spread", float(s0)),
                _row(exp, desc, "spread refined", float(s1)),
                _row(exp, desc, "spread drift", drift, 0.0, "oracle", tol.drift, "abs"),
            ]
    return _sorted(rows)


# ---------------------------------------------------------------------------
# driver and output

_RUNNERS = {
    "identity": run_identity_check,
    "envelope": run_envelope_check,
    "oracle": run_oracle_compare,
    "ratio-sweep": run_ratio_sweep,
}


def run_experiment(config, refine=0):
    """Dispatch on ``config.experiment``."""
    if refine < 0:
        raise ConfigError("refine must be nonnegative")
    return _RUNNERS[config.experiment](config, refine)


_CSV_FIELDS = ("experiment", "descriptor", "quantity", "value", "reference", "abs_err", "rel_err",
               "stderr", "tolerance", "tol_kind", "passed", "provenance", "note")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows):
    """RFC 4180 CSV text; floats in shortest round-trip form, no timings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(_CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in _CSV_FIELDS])
    return buf.getvalue()


def all_passed(rows):
    """True when every row that carries a tolerance passed."""
    return all(r.passed for r in rows if r.passed is not None)


def write_outputs(rows, config, out_dir, refine=0, wall=None):
    """Write ``results.csv`` and ``run.json`` into ``out_dir``."""
    from . import __version__

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "results.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))
    meta = {
        "version": __version__,
        "experiment": config.experiment,
        "config": config.raw,
        "seed": config.grid.seed,
        "refine": refine,
        "all_passed": all_passed(rows),
        "wall_time": wall,
        "row_wall_times": [{"descriptor": r.descriptor, "quantity": r.quantity, "wall_time": r.wall_time} for r in rows],
    }
    with open(os.path.join(out_dir, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
