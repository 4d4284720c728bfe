r"""Quadrature: adaptive 1-D integration, fixed Gauss rules, and cone grids.

Two families of tools live here.

The *adaptive* entry points (:func:`integrate_adaptive`,
:func:`integrate_halfline`) are scalar and accurate; they back the oracle
computations and the scalar kernel evaluators.  They delegate the actual
subdivision to QUADPACK through :func:`scipy.integrate.quad`.

The *fixed rules* (:func:`gauss_legendre`, :func:`algebraic_halfline_rule`,
:func:`exponential_halfline_rule`, :func:`graded_rule`) return node/weight
arrays so that large batches of integrals can be evaluated with plain numpy
broadcasting.

:class:`ConeGrid` discretizes the cone
:math:`\Gamma(x) = \{(y,t): |x-y| < t\}` (or its half-line version) with
weights for the measure :math:`dy\,dt/t^{n+1}`.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math
import warnings

import numpy as np
from scipy import integrate as _integrate
from scipy import special as _sp

from .errors import AccuracyError, DomainError

__all__ = [
    "QuadratureResult",
    "integrate_adaptive",
    "integrate_halfline",
    "gauss_legendre",
    "algebraic_halfline_rule",
    "exponential_halfline_rule",
    "graded_rule",
    "log_panels_rule",
    "ConeGrid",
    "build_cone_grid",
    "unit_ball_volume",
    "cone_window_report",
]


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    est_error: float
    evaluations: int

    def __post_init__(self):
        if self.est_error < 0:
            raise ValueError("est_error must be nonnegative")


# ---------------------------------------------------------------------------
# adaptive


def _quad_real(f, a, b, tol, limit, points):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        val, err = _integrate.quad(
            f, a, b, epsabs=tol, epsrel=tol, limit=limit, points=points
        )
    bad = [w for w in caught if issubclass(w.category, _integrate.IntegrationWarning)]
    return val, err, bad


def integrate_adaptive(f, a, b, tol=1e-10, limit=500, points=None):
    """Adaptive Gauss-Kronrod integration of ``f`` over ``[a, b]``.

    ``f`` may return real or complex scalars.  Integrable algebraic endpoint
    singularities are handled by the extrapolated bisection of QUADPACK's
    QAGS.  A run that exhausts its subdivision budget raises
    :class:`AccuracyError` carrying the best estimate, unless that estimate's
    own error bound is still within ``100 * tol`` of the request.
    """
    if not a < b:
        raise DomainError("integrate_adaptive requires a < b")
    count = [0]

    def counted(x):
        count[0] += 1
        return f(x)

    probe = counted(0.5 * (a + b))
    if np.iscomplexobj(probe):
        re, er_re, bad_re = _quad_real(lambda x: counted(x).real, a, b, tol, limit, points)
        im, er_im, bad_im = _quad_real(lambda x: counted(x).imag, a, b, tol, limit, points)
        value, err, bad = complex(re, im), math.hypot(er_re, er_im), bad_re + bad_im
    else:
        value, err, bad = _quad_real(counted, a, b, tol, limit, points)
        value = float(value)
    if bad and err > 100 * max(tol, tol * abs(value)):
        raise AccuracyError(f"adaptive quadrature did not converge: {bad[0].message}", value, err)
    return QuadratureResult(value, float(err), count[0])


def integrate_halfline(f, decay="exponential", tol=1e-10, scale=1.0, limit=500):
    """Integrate ``f`` over :math:`(0,\\infty)`.

    ``decay`` declares the tail: ``"exponential"`` or ``("algebraic", p)``
    with :math:`|f(x)| = O(x^{-p})`, ``p > 1``.  The range is split at
    ``scale``; the finite piece goes through :func:`integrate_adaptive` and
    the tail through a substitution matched to the decay (identity shift for
    exponential tails, :math:`x = \\text{scale}/w` for algebraic ones, which
    turns the tail into a finite integral with an integrable endpoint).
    """
    head = integrate_adaptive(f, 0.0, scale, tol=tol, limit=limit)
    if decay == "exponential":
        count = [0]

        def shifted(v):
            count[0] += 1
            return f(scale + v)

        probe = shifted(1.0)
        if np.iscomplexobj(probe):
            parts = [
                _integrate.quad(lambda v: shifted(v).real, 0, np.inf, epsabs=tol, epsrel=tol, limit=limit),
                _integrate.quad(lambda v: shifted(v).imag, 0, np.inf, epsabs=tol, epsrel=tol, limit=limit),
            ]
            tail = QuadratureResult(complex(parts[0][0], parts[1][0]), math.hypot(parts[0][1], parts[1][1]), count[0])
        else:
            val, err = _integrate.quad(shifted, 0, np.inf, epsabs=tol, epsrel=tol, limit=limit)
            tail = QuadratureResult(float(val), float(err), count[0])
    else:
        kind, p = decay
        if kind != "algebraic" or not p > 1:
            raise DomainError("decay must be 'exponential' or ('algebraic', p) with p > 1")
        tail = integrate_adaptive(lambda w: f(scale / w) * scale / (w * w), 0.0, 1.0, tol=tol, limit=limit)
    return QuadratureResult(
        head.value + tail.value, head.est_error + tail.est_error, head.evaluations + tail.evaluations
    )


# ---------------------------------------------------------------------------
# fixed rules


@lru_cache(maxsize=None)
def _legendre(n):
    x, w = _sp.roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _jacobi01(n, a0, a1):
    # nodes/weights on [0,1] for weight u^a0 (1-u)^a1
    x, w = _sp.roots_jacobi(n, a1, a0)
    u = 0.5 * (x + 1.0)
    w = w * 0.5 ** (a0 + a1 + 1.0)
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


def gauss_legendre(n, a=-1.0, b=1.0):
    """Gauss-Legendre nodes and weights on ``[a, b]`` (broadcasts over arrays)."""
    x, w = _legendre(int(n))
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def algebraic_halfline_rule(n, a0, ainf):
    r"""Rule for :math:`\int_0^\infty g(s)\,s^{a_0}(1+s)^{-(a_0+a_\infty+2)}\,ds`.

    Returns ``(s, w, dens)`` where ``dens`` is the weight function sampled at
    the nodes, so that :math:`\int_0^\infty F(s)\,ds \approx
    \sum_i w_i F(s_i)/\text{dens}_i` for any ``F`` behaving like
    :math:`s^{a_0}` at 0 and :math:`s^{-(a_\infty+2)}` at infinity.
    Obtained from Gauss-Jacobi on :math:`u = s/(1+s)`.
    """
    if a0 <= -1 or ainf <= -1:
        raise DomainError("algebraic_halfline_rule exponents must exceed -1")
    u, w = _jacobi01(int(n), float(a0), float(ainf))
    s = u / (1.0 - u)
    dens = s ** a0 * (1.0 + s) ** (-(a0 + ainf + 2.0))
    return s, w, dens


@lru_cache(maxsize=None)
def _genlaguerre(n, a0):
    x, w = _sp.roots_genlaguerre(n, a0)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def exponential_halfline_rule(n, a0):
    r"""Generalized Gauss-Laguerre rule: :math:`\int_0^\infty g(s)s^{a_0}e^{-s}ds`."""
    if a0 <= -1:
        raise DomainError("exponent must exceed -1")
    return _genlaguerre(int(n), float(a0))


def graded_rule(lo, hi, center, scale, n_panels, n_nodes):
    r"""Composite rule on ``[lo, hi]`` graded geometrically away from ``center``.

    Panel breakpoints sit at ``center +- scale * r**j`` with the ratio ``r``
    chosen so that ``n_panels`` panels per side reach the far end of the
    interval.  All arguments except the counts broadcast; the result has
    shape ``broadcast + (2 * n_panels * n_nodes,)``.  Panels falling outside
    ``[lo, hi]`` collapse to zero width (zero weights) so the shape is fixed.
    """
    lo, hi, center, scale = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (lo, hi, center, scale))
    )
    reach = np.maximum(np.maximum(hi - center, center - lo), scale)
    ratio = (reach / scale) ** (1.0 / max(n_panels - 1, 1))
    j = np.arange(n_panels)
    # distances from the center: 0, scale, scale*r, ..., reach
    d = np.concatenate(
        [np.zeros(lo.shape + (1,)), scale[..., None] * ratio[..., None] ** j], axis=-1
    )
    d[..., -1] = np.maximum(d[..., -1], reach)
    right = center[..., None] + d
    left = center[..., None] - d
    edges_r = np.clip(right, lo[..., None], hi[..., None])
    edges_l = np.clip(left, lo[..., None], hi[..., None])
    nodes_r, w_r = gauss_legendre(n_nodes, edges_r[..., :-1], edges_r[..., 1:])
    nodes_l, w_l = gauss_legendre(n_nodes, edges_l[..., 1:], edges_l[..., :-1])
    shp = lo.shape + (n_panels * n_nodes,)
    nodes = np.concatenate([nodes_l.reshape(shp), nodes_r.reshape(shp)], axis=-1)
    weights = np.concatenate([w_l.reshape(shp), w_r.reshape(shp)], axis=-1)
    return nodes, weights


def log_panels_rule(lo, hi, nodes_per_decade, min_panels=1):
    """Gauss-Legendre in ``log t`` with one panel per decade on ``[lo, hi]``.

    Returns ``(t, w)`` with ``w`` the weights for ``dt / t``.
    """
    if not 0 < lo < hi:
        raise DomainError("log_panels_rule needs 0 < lo < hi")
    n_pan = max(min_panels, int(math.ceil(math.log10(hi / lo) - 1e-9)))
    edges = np.linspace(math.log(lo), math.log(hi), n_pan + 1)
    s, w = gauss_legendre(nodes_per_decade, edges[:-1], edges[1:])
    return np.exp(s.ravel()), w.ravel()


# ---------------------------------------------------------------------------
# cone grids


def unit_ball_volume(n):
    """Volume :math:`v_n` of the unit ball in :math:`\\mathbb{R}^n`."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True, eq=False)
class ConeGrid:
    """Nodes and weights discretizing a truncated cone with apex ``apex``.

    ``t`` and ``weights`` are flat arrays over all nodes; ``y`` has shape
    ``(N,)`` for one-dimensional settings and ``(N, n)`` otherwise.
    ``t_nodes`` lists the distinct heights (with ``dt/t`` weights
    ``t_weights``) and ``slab`` maps every node to its height index.
    ``weights`` integrate against :math:`dy\\,dt/t^{n+1}`.
    """

    apex: np.ndarray
    dim: int
    halfline: bool
    t_nodes: np.ndarray
    t: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    slab: np.ndarray
    t_window: tuple = field(default=(0.0, 0.0))
    nodes_per_decade: int = 8
    spatial_nodes: int = 24
    t_weights: np.ndarray = None

    def __post_init__(self):
        for name in ("apex", "t_nodes", "t", "y", "weights", "slab", "t_weights"):
            if getattr(self, name) is not None:
                getattr(self, name).setflags(write=False)

    @property
    def size(self):
        return self.t.size

    def distance(self):
        """|apex - y| at every node."""
        if self.dim == 1:
            return np.abs(self.y - self.apex[0])
        return np.linalg.norm(self.y - self.apex, axis=-1)

    def restrict(self, a, b):
        """Same cone and resolution, rebuilt on the height window ``(a, b)``."""
        return build_cone_grid(
            self.apex if self.dim > 1 else self.apex[0],
            self.dim,
            a,
            b,
            self.nodes_per_decade,
            self.spatial_nodes,
            self.halfline,
        )

    def slab_mass(self, a, b):
        """Integral of 1 over the slab ``a < t < b`` of the cone."""
        return float(self.restrict(a, b).weights.sum())


def _ball_rule_1d(apex, t, m, halfline):
    if halfline:
        return gauss_legendre(m, np.maximum(apex - t, 0.0), apex + t)
    # relative to the apex, so translated cones share weights bit for bit
    u, w = gauss_legendre(m, -1.0, 1.0)
    return apex + t[:, None] * u, t[:, None] * w


def _ball_rule_nd(apex, t, m, n):
    # product rule on the ball of radius t: Gauss radial x angular
    r_u, r_w = _jacobi01(m, float(n - 1), 0.0)  # weight r^{n-1} on [0,1]
    if n == 2:
        k = 2 * m
        ang = 2 * math.pi * np.arange(k) / k
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        dir_w = np.full(k, 2 * math.pi / k)
    else:
        cz, cw = _legendre(m)
        k = 2 * m
        ph = 2 * math.pi * np.arange(k) / k
        sz = np.sqrt(1 - cz ** 2)
        dirs = np.stack(
            [
                (sz[:, None] * np.cos(ph)[None, :]).ravel(),
                (sz[:, None] * np.sin(ph)[None, :]).ravel(),
                np.repeat(cz, k),
            ],
            axis=-1,
        )
        dir_w = (cw[:, None] * np.full(k, 2 * math.pi / k)[None, :]).ravel()
    unit = (r_u[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    unit_w = (r_w[:, None] * dir_w[None, :]).ravel()
    y = apex[None, None, :] + t[:, None, None] * unit[None, :, :]
    w = t[:, None] ** n * unit_w[None, :]
    return y, w


def build_cone_grid(apex, dim=1, t_min=1e-3, t_max=1e3, nodes_per_decade=8, spatial_nodes=24, halfline=False):
    """Discretize :math:`\\Gamma(x)` truncated to ``t_min < t < t_max``.

    Heights are Gauss-Legendre nodes in ``log t`` (one panel per decade);
    for every height the ball ``B(apex, t)`` (or
    ``B_+(apex, t) = (max(0, apex - t), apex + t)`` on the half-line) gets
    its own Gauss rule with ``spatial_nodes`` nodes per direction, so the
    resolution relative to the ball is the same at every height.
    """
    if not 0 < t_min < t_max:
        raise DomainError("cone window must satisfy 0 < t_min < t_max")
    if nodes_per_decade < 4 or spatial_nodes < 4:
        raise DomainError("node counts must be at least 4")
    if dim not in (1, 2, 3):
        raise DomainError("cone grids support dimensions 1, 2 and 3")
    if halfline and dim != 1:
        raise DomainError("half-line cones are one-dimensional")
    apex = np.atleast_1d(np.asarray(apex, dtype=float))
    if apex.size != dim:
        raise DomainError("apex dimension does not match dim")
    if halfline and not apex[0] > 0:
        raise DomainError("half-line apex must be positive")
    t_nodes, w_log = log_panels_rule(t_min, t_max, nodes_per_decade)
    if dim == 1:
        y, wy = _ball_rule_1d(apex[0], t_nodes, spatial_nodes, halfline)
        npts = y.shape[1]
    else:
        y, wy = _ball_rule_nd(apex, t_nodes, spatial_nodes, dim)
        npts = y.shape[1]
    # dy dt / t^{n+1} = dy * (dt/t) / t^n
    weights = wy * (w_log / t_nodes ** dim)[:, None]
    t = np.repeat(t_nodes, npts)
    slab = np.repeat(np.arange(t_nodes.size), npts)
    y = y.reshape(-1) if dim == 1 else y.reshape(-1, dim)
    return ConeGrid(
        apex=apex,
        dim=dim,
        halfline=halfline,
        t_nodes=t_nodes,
        t=t,
        y=y,
        weights=weights.reshape(-1),
        slab=slab,
        t_window=(float(t_min), float(t_max)),
        nodes_per_decade=int(nodes_per_decade),
        spatial_nodes=int(spatial_nodes),
        t_weights=w_log,
    )


def cone_window_report(integrand, apex, dim=1, t_min=1e-3, t_max=1e3, halfline=False, **kw):
    """Effect of doubling the cone window (in log scale) on ``sum w * integrand``.

    ``integrand(grid)`` returns node values.  Returns the pair of sums and
    their relative change, the truncation diagnostic for ``[t_min, t_max]``.
    """
    g0 = build_cone_grid(apex, dim, t_min, t_max, halfline=halfline, **kw)
    g1 = build_cone_grid(apex, dim, t_min ** 2 if t_min < 1 else t_min / 10, t_max ** 2 if t_max > 1 else t_max * 10, halfline=halfline, **kw)
    s0 = float(np.sum(g0.weights * integrand(g0)))
    s1 = float(np.sum(g1.weights * integrand(g1)))
    return s0, s1, abs(s1 - s0) / max(abs(s1), 1e-300)
