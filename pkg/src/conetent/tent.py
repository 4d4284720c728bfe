r"""Cone functionals, conical square functions and tent norms on grids.

For a field :math:`g(y,t)` on the upper half-space,

.. math:: A_q(g)(x) = \Big(\int_{\Gamma(x)} |g(y,t)|^q\,\frac{dy\,dt}{t^{n+1}}\Big)^{1/q},
          \qquad \|g\|_{T_p^q} = \|A_q(g)\|_{L^p},

and the conical square function of order :math:`\beta` is :math:`A_2` of
:math:`(y,t)\mapsto t^\beta\partial_t^\beta P_t(f)(y)`.  On the half-line
the cone is clipped to :math:`y > 0` and the measure is
:math:`dy\,dt/t^2`.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .errors import DomainError
from .fracderiv import poisson_apply
from .kernels import SettingDescriptor
from .quadrature import ConeGrid, build_cone_grid, gauss_legendre
from .sampled import SampledFunction

__all__ = [
    "SampledFunction",
    "ConeField",
    "ConeParams",
    "XGrid",
    "aq_functional",
    "aq_with_tails",
    "build_x_grid",
    "cone_fields",
    "conical_sqfn",
    "sqfn_vector_naive",
    "sqfn_profile",
    "lp_norm",
    "lp_norm_grid",
    "tent_norm_scalar",
]


@dataclass(frozen=True, eq=False)
class ConeField:
    """Values of a field at the nodes of a :class:`ConeGrid`.

    ``values`` is ``(N,)`` (real or complex) or ``(N, d)`` for
    :math:`\\mathbb{R}^d`-valued fields.
    """

    grid: ConeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape[0] != self.grid.size:
            raise DomainError("one value per cone node required")
        v = np.array(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def pointwise_norm(self, q_norm=2.0):
        """Modulus of scalar values, or the row-wise l^q norm of vector values."""
        v = self.values
        if v.ndim == 2 and v.shape[1] == 1:
            v = v[:, 0]
        if v.ndim == 1:
            return np.abs(v)
        if q_norm == np.inf:
            return np.max(np.abs(v), axis=1)
        return np.sum(np.abs(v) ** q_norm, axis=1) ** (1.0 / q_norm)


@dataclass(frozen=True)
class ConeParams:
    """Cone discretization relative to the input function.

    Heights run over ``[t_min * s, t_max * s']`` snapped outward to whole
    decades, where ``s`` is the larger of the function scale and the apex
    distance to the support and ``s'`` the larger of the scale and
    ``far_factor`` times that distance divided by ``t_max``.  With
    ``extrapolate`` the slab densities are continued as power laws beyond
    both ends of the window.
    """

    t_min: float = 1e-3
    t_max: float = 1e3
    nodes_per_decade: int = 8
    spatial_nodes: int = 24
    far_factor: float = 100.0
    extrapolate: bool = True

    def __post_init__(self):
        if not 0 < self.t_min < 1 < self.t_max:
            raise DomainError("cone window must satisfy 0 < t_min < 1 < t_max")
        if self.nodes_per_decade < 4 or self.spatial_nodes < 4:
            raise DomainError("node counts must be at least 4")

    def refine(self, k=1):
        """Double both resolutions ``k`` times."""
        return replace(self, nodes_per_decade=self.nodes_per_decade * 2 ** k, spatial_nodes=self.spatial_nodes * 2 ** k)

    def window(self, scale, dist):
        lo = self.t_min * max(scale, dist)
        hi = max(self.t_max * scale, self.far_factor * dist)
        return 10.0 ** math.floor(math.log10(lo)), 10.0 ** math.ceil(math.log10(hi))


def _support_distance(x, support, halfline):
    a, b = support
    return np.maximum(np.maximum(a - x, x - b), 0.0)


def aq_functional(field, q=2.0, q_norm=2.0):
    """:math:`(\\sum_j w_j |g_j|^q)^{1/q}` over the cone nodes."""
    if not q >= 1:
        raise DomainError("q must be at least 1")
    g = field.pointwise_norm(q_norm)
    return float(np.sum(field.grid.weights * g ** q) ** (1.0 / q))


def _slab_density(grid, nodal):
    mass = np.bincount(grid.slab, weights=grid.weights * nodal, minlength=grid.t_nodes.size)
    return mass / grid.t_weights


def _power_tail(t1, t2, r1, r2, edge, upper):
    # continue a power law through (t1, r1), (t2, r2) past the window edge
    if not (r1 > 0 and r2 > 0):
        return 0.0
    gam = math.log(r2 / r1) / math.log(t2 / t1)
    if upper:
        if gam >= -0.05:
            return 0.0
        return r2 * (edge / t2) ** gam / -gam
    if gam <= 0.05:
        return 0.0
    return r1 * (edge / t1) ** gam / gam


def aq_with_tails(field, q=2.0, q_norm=2.0):
    """:func:`aq_functional` plus power-law continuation of both height tails."""
    grid = field.grid
    g = field.pointwise_norm(q_norm) ** q
    core = float(np.sum(grid.weights * g))
    if grid.t_nodes.size < 4:
        return core ** (1.0 / q)
    rho = _slab_density(grid, g)
    tn = grid.t_nodes
    lo, hi = grid.t_window
    extra = _power_tail(tn[0], tn[1], rho[0], rho[1], lo, False)
    extra += _power_tail(tn[-2], tn[-1], rho[-2], rho[-1], hi, True)
    return (core + extra) ** (1.0 / q)


def _grids_for(setting, f, xs, cone):
    halfline = setting.halfline
    grids = []
    for x in np.atleast_1d(xs):
        d = float(_support_distance(x, f.support, halfline))
        lo, hi = cone.window(f.scale, d)
        grids.append(build_cone_grid(x, 1, lo, hi, cone.nodes_per_decade, cone.spatial_nodes, halfline))
    return grids


def cone_fields(setting, beta, f, xs, cone=ConeParams(), route="auto", profile=None):
    """:class:`ConeField` of :math:`t^\\beta\\partial_t^\\beta P_t(f)` on the cone of every apex.

    All apexes are evaluated in one batched call, sorted by height so the
    kernel quadrature can size its grading per batch.
    """
    if not isinstance(setting, SettingDescriptor):
        raise DomainError("setting must be a SettingDescriptor")
    if setting.family == "classical" and setting.n != 1:
        raise DomainError("square functions are evaluated in one dimension")
    grids = _grids_for(setting, f, xs, cone)
    y = np.concatenate([g.y for g in grids])
    t = np.concatenate([g.t for g in grids])
    order = np.argsort(t, kind="stable")
    u_sorted = poisson_apply(setting, beta, f, y[order], t[order], route=route, profile=profile)
    u = np.empty_like(u_sorted)
    u[order] = u_sorted
    out, start = [], 0
    for g in grids:
        out.append(ConeField(g, u[start:start + g.size]))
        start += g.size
    return out


def conical_sqfn(setting, beta, f, x, cone=ConeParams(), route="auto", profile=None):
    r""":math:`S_\beta f(x)` for scalar ``f`` (array over ``x``)."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    if f.dim != 1:
        raise DomainError("use sqfn_vector_naive for vector valued functions")
    fields = cone_fields(setting, beta, f, x, cone, route, profile)
    agg = aq_with_tails if cone.extrapolate else aq_functional
    vals = np.array([agg(fl, 2.0) for fl in fields])
    return float(vals[0]) if np.ndim(x) == 0 else vals


def sqfn_vector_naive(setting, beta, f, q_norm, x, cone=ConeParams(), route="auto"):
    r""":math:`A_2` of the pointwise :math:`\ell^q` norm of the componentwise transform."""
    if not q_norm >= 1:
        raise DomainError("q_norm must be at least 1")
    fields = cone_fields(setting, beta, f, x, cone, route)
    agg = aq_with_tails if cone.extrapolate else aq_functional
    vals = np.array([agg(fl, 2.0, q_norm) for fl in fields])
    return float(vals[0]) if np.ndim(x) == 0 else vals


# ---------------------------------------------------------------------------
# L^p norms


@dataclass(frozen=True, eq=False)
class XGrid:
    """Apex nodes with quadrature weights, plus the tail geometry.

    ``tail_idx`` holds ``(inner, outer, edge)`` per open end: the indices of
    the two outermost nodes and the distance from ``center`` where the grid
    stops.
    """

    nodes: np.ndarray
    weights: np.ndarray
    center: float
    halfline: bool
    tail_idx: tuple = field(default=())

    @property
    def size(self):
        return self.nodes.size


def build_x_grid(support, scale=None, halfline=False, dilate=3.0, panel_nodes=8, tail_decades=3, tail_nodes_per_decade=6):
    """Composite Gauss grid: the support dilated about its center, then log tails.

    The core is split into panels of about twice ``scale``.  Tails cover
    ``tail_decades`` decades beyond the core on each open side.
    """
    a, b = (float(v) for v in support)
    if not a < b:
        raise DomainError("support must be a nonempty interval")
    scale = 0.5 * (b - a) if scale is None else float(scale)
    c = 0.5 * (a + b)
    R = 0.5 * (b - a) * dilate
    lo = max(0.0, c - R) if halfline else c - R
    hi = c + R
    n_pan = int(min(48, max(4, math.ceil((hi - lo) / (2.0 * scale)))))
    e = np.linspace(lo, hi, n_pan + 1)
    xc, wc = gauss_legendre(panel_nodes, e[:-1], e[1:])
    s_edges = np.linspace(0.0, tail_decades * math.log(10.0), tail_decades + 1)
    s, ws = gauss_legendre(tail_nodes_per_decade, s_edges[:-1], s_edges[1:])
    r = (hi - c) * np.exp(s.ravel())
    wr = ws.ravel() * r
    edge = (hi - c) * 10.0 ** tail_decades
    if halfline:
        if lo > 0:
            raise DomainError("half-line grids start at the origin")
        x = np.concatenate([xc.ravel(), c + r])
        w = np.concatenate([wc.ravel(), wr])
        tails = ((x.size - 2, x.size - 1, edge),)
    else:
        x = np.concatenate([(c - r)[::-1], xc.ravel(), c + r])
        w = np.concatenate([wr[::-1], wc.ravel(), wr])
        tails = ((1, 0, edge), (x.size - 2, x.size - 1, edge))
    return XGrid(x, w, c, halfline, tails)


def lp_norm_grid(values, xgrid, p, tails=True):
    """:math:`(\\int g^p)^{1/p}` from values at the nodes of ``xgrid``.

    With ``tails`` the integrand is continued past each end of the grid as
    the power law through its two outermost nodes (when that law decays
    fast enough to be integrable).
    """
    if not p >= 1:
        raise DomainError("p must be at least 1")
    g = np.abs(np.asarray(values, dtype=float)) ** p
    total = float(np.sum(xgrid.weights * g))
    if tails:
        for i1, i2, edge in xgrid.tail_idx:
            r1 = abs(xgrid.nodes[i1] - xgrid.center)
            r2 = abs(xgrid.nodes[i2] - xgrid.center)
            if g[i1] > 0 and g[i2] > 0:
                gam = math.log(g[i2] / g[i1]) / math.log(r2 / r1)
                if gam < -1.0:
                    total += g[i2] * (edge / r2) ** gam * edge / (-gam - 1.0)
    return total ** (1.0 / p)


def lp_norm(g, p, q_norm=2.0):
    """:math:`(\\int |g|^p)^{1/p}` of a sampled function over its support.

    Vector values are measured with the :math:`\\ell^q` norm ``q_norm``.
    """
    if not p >= 1:
        raise DomainError("p must be at least 1")
    a, b = g.support
    panels = int(max(8, math.ceil(4 * (b - a) / g.scale)))
    e = np.linspace(a, b, panels + 1)
    x, w = gauss_legendre(16, e[:-1], e[1:])
    vals = np.abs(g(x.ravel()))
    if vals.ndim > 1:
        vals = np.max(vals, axis=-1) if q_norm == np.inf else np.sum(vals ** q_norm, axis=-1) ** (1.0 / q_norm)
    return float(np.sum(w.ravel() * vals ** p) ** (1.0 / p))


def sqfn_profile(setting, beta, f, xgrid, cone=ConeParams(), route="auto", profile=None):
    """:math:`S_\\beta f` at every node of ``xgrid``."""
    return conical_sqfn(setting, beta, f, xgrid.nodes, cone, route, profile)


def tent_norm_scalar(field_family, p, q, xgrid, tails=True):
    """:math:`\\|A_q(g)\\|_{L^p}` with ``field_family(x)`` returning the field at apex ``x``."""
    vals = np.array([aq_functional(field_family(x), q) for x in xgrid.nodes])
    return lp_norm_grid(vals, xgrid, p, tails)
