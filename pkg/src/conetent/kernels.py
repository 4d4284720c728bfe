r"""Heat and Poisson kernels for the classical, Hermite, Bessel and Laguerre settings.

Conventions
-----------
* Classical Poisson kernel :math:`P_t(z) = c_n t/(|z|^2+t^2)^{(n+1)/2}`,
  :math:`c_n = \Gamma((n+1)/2)/\pi^{(n+1)/2}`.
* Hermite heat kernel by Mehler's formula, written with hyperbolic
  functions: :math:`\pi^{-n/2}(2\sinh 2t)^{-n/2}
  \exp[-\tfrac14(|x-y|^2\coth t + |x+y|^2\tanh t)]`.
* Laguerre heat kernel :math:`(\xi/\sinh 2t)^{1/2} I_\alpha(\xi)
  e^{-\frac12(x^2+y^2)\coth 2t}` with :math:`\xi = xy/\sinh 2t`, i.e. the
  semigroup :math:`e^{-2t(2k+\alpha+1)}` on :math:`\varphi_k^\alpha`.
  Evaluated in log space so it never overflows.
* Bessel Poisson kernel through its :math:`\theta`-integral.

Spatial arguments are scalars (or arrays of scalars) in one dimension and
arrays whose last axis has length ``n`` otherwise.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy import integrate as _integrate
from scipy import special as _sp

from .errors import AccuracyError, CapabilityError, DomainError
from .quadrature import gauss_legendre, integrate_adaptive, _jacobi01
from .specfun import bessel_j, log_bessel_i

__all__ = [
    "SettingDescriptor",
    "MAX_TIME_ORDER",
    "poisson_classical",
    "poisson_classical_dtm",
    "dt_power_family",
    "heat_hermite",
    "heat_laguerre",
    "heat_gauss_weierstrass",
    "poisson_bessel",
    "poisson_bessel_array",
    "poisson_subordinate",
    "subordination_weight",
    "hankel_kernel",
    "hankel_transform",
    "critical_radius_hermite",
]

#: Largest integer time-derivative order supported (covers beta < 9).
MAX_TIME_ORDER = 9

_FAMILIES = ("classical", "hermite", "bessel", "laguerre")


@dataclass(frozen=True)
class SettingDescriptor:
    """Which operator a kernel belongs to, with its parameters.

    Use the constructors :meth:`classical`, :meth:`hermite`, :meth:`bessel`
    and :meth:`laguerre` rather than the raw initializer.
    """

    family: str
    n: int = 1
    lam: float = None
    alpha: float = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if self.family in ("classical", "hermite"):
            if self.lam is not None or self.alpha is not None:
                raise DomainError(f"{self.family} setting takes only n")
            if int(self.n) != self.n or self.n < 1:
                raise DomainError("dimension n must be a positive integer")
        elif self.family == "bessel":
            if self.alpha is not None or self.n != 1:
                raise DomainError("bessel setting takes only lam")
            if self.lam is None or not self.lam > 0:
                raise DomainError("bessel setting requires lam > 0")
        else:
            if self.lam is not None or self.n != 1:
                raise DomainError("laguerre setting takes only alpha")
            if self.alpha is None or not self.alpha > 0:
                raise DomainError("laguerre setting requires alpha > 0")

    @classmethod
    def classical(cls, n=1):
        return cls("classical", n=n)

    @classmethod
    def hermite(cls, n=1):
        return cls("hermite", n=n)

    @classmethod
    def bessel(cls, lam):
        return cls("bessel", lam=float(lam))

    @classmethod
    def laguerre(cls, alpha):
        return cls("laguerre", alpha=float(alpha))

    @property
    def halfline(self):
        return self.family in ("bessel", "laguerre")

    def describe(self):
        if self.family in ("classical", "hermite"):
            return f"{self.family}(n={self.n})"
        if self.family == "bessel":
            return f"bessel(lam={self.lam:g})"
        return f"laguerre(alpha={self.alpha:g})"


def _norm(z, n):
    z = np.asarray(z, dtype=float)
    if n == 1:
        return np.abs(z)
    if z.shape[-1] != n:
        raise DomainError(f"spatial argument must have last axis of length {n}")
    return np.linalg.norm(z, axis=-1)


def _positive_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("t must be positive")
    return t


def _out(a):
    return a if np.ndim(a) else float(a)


# ---------------------------------------------------------------------------
# classical


def _c_n(n):
    return math.gamma((n + 1) / 2.0) / math.pi ** ((n + 1) / 2.0)


def poisson_classical(n, t, z):
    """Classical Poisson kernel :math:`P_t(z)` on :math:`\\mathbb{R}^n`."""
    t = _positive_t(t)
    r = _norm(z, n)
    return _out(_c_n(n) * t / (r * r + t * t) ** ((n + 1) / 2.0))


def _E(m, l):
    return 2 ** (m + 1 - 2 * l) * math.factorial(m + 1) / (math.factorial(l) * math.factorial(m + 1 - 2 * l))


def poisson_classical_dtm(n, m, t, z):
    """:math:`\\partial_t^m P_t(z)` from the closed Faa di Bruno sums.

    For ``n >= 2`` the sum over ``l`` carries the product
    :math:`(n-1)(n+1)\\cdots(n-1+2(m-l))` and the factor
    :math:`1/(1-n)`; for ``n = 1`` the logarithmic form is used.  Both use
    :math:`E_{m,l} = 2^{m+1-2l}(m+1)!/(l!(m+1-2l)!)`.
    """
    if int(m) != m or m < 0:
        raise DomainError("derivative order must be a nonnegative integer")
    if m > MAX_TIME_ORDER:
        raise CapabilityError(f"time derivatives above order {MAX_TIME_ORDER} are not supported")
    if m == 0:
        return poisson_classical(n, t, z)
    t = _positive_t(t)
    r = _norm(z, n)
    q = t * t + r * r
    total = np.zeros(np.broadcast(t, r).shape)
    if n == 1:
        for l in range((m + 1) // 2 + 1):
            coef = 0.5 * (-1) ** (m - l) * math.factorial(m - l) * _E(m, l)
            total = total + coef * t ** (m + 1 - 2 * l) / q ** (m + 1 - l)
    else:
        for l in range((m + 1) // 2 + 1):
            prod = 1.0
            for j in range(m - l + 1):
                prod *= n - 1 + 2 * j
            coef = (-0.5) ** (m + 1 - l) * prod * _E(m, l) / (1.0 - n)
            total = total + coef * t ** (m + 1 - 2 * l) / q ** ((n + 1 + 2 * (m - l)) / 2.0)
    return _out(_c_n(n) * total)


def dt_power_family(m, t, A, mu):
    r""":math:`\partial_t^m [\,t\,(t^2+A)^{-\mu}]` for arbitrary ``mu > 0``.

    Leibniz on :math:`t\cdot g` with Faa di Bruno for
    :math:`g = (t^2+A)^{-\mu}` (only :math:`q' = 2t` and :math:`q'' = 2`
    are nonzero), so

    .. math:: \partial_t^k g = \sum_l \frac{k!}{l!(k-2l)!}(2t)^{k-2l}
              (-1)^{k-l}(\mu)_{k-l}\,(t^2+A)^{-\mu-(k-l)}.

    Used for the Bessel kernel and as an independent check of
    :func:`poisson_classical_dtm`.
    """
    t = np.asarray(t, dtype=float)
    A = np.asarray(A, dtype=float)
    q = t * t + A

    def dg(k):
        acc = 0.0
        for l in range(k // 2 + 1):
            j = k - l
            rising = math.exp(math.lgamma(mu + j) - math.lgamma(mu))
            acc = acc + (
                math.factorial(k) / (math.factorial(l) * math.factorial(k - 2 * l))
                * (2.0 * t) ** (k - 2 * l) * (-1) ** j * rising * q ** (-mu - j)
            )
        return acc

    out = t * dg(m)
    if m > 0:
        out = out + m * dg(m - 1)
    return out


# ---------------------------------------------------------------------------
# heat kernels


def _log_sinh(x):
    # log sinh(x) for x > 0 without overflow
    return x + np.log(-np.expm1(-2.0 * x)) - math.log(2.0)


def heat_gauss_weierstrass(n, t, z):
    """Gauss-Weierstrass kernel :math:`(4\\pi t)^{-n/2}e^{-|z|^2/4t}`."""
    t = _positive_t(t)
    r = _norm(z, n)
    return _out((4 * math.pi * t) ** (-n / 2.0) * np.exp(-r * r / (4 * t)))


def heat_hermite(n, t, x, y, log=False):
    """Mehler kernel :math:`W_t^{\\mathcal{H}}(x,y)` (or its logarithm)."""
    t = _positive_t(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dm = _norm(x - y, n) ** 2
    dp = _norm(x + y, n) ** 2
    val = (
        -0.5 * n * math.log(math.pi)
        - 0.5 * n * (math.log(2.0) + _log_sinh(2.0 * t))
        - 0.25 * (dm / np.tanh(t) + dp * np.tanh(t))
    )
    return _out(val if log else np.exp(val))


def heat_laguerre(alpha, t, x, y, log=False):
    """Laguerre heat kernel :math:`W_t^{\\mathcal{L}_\\alpha}(x,y)`, ``t, x, y > 0``.

    Computed as a single exponential of
    ``0.5*log(xi) - 0.5*log(sinh 2t) + log I_alpha(xi) - 0.5(x^2+y^2)coth 2t``.
    """
    if not alpha > -0.5:
        raise DomainError("laguerre kernel requires alpha > -1/2")
    t = _positive_t(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise DomainError("laguerre kernel is defined for x, y > 0")
    ls = _log_sinh(2.0 * t)
    log_xi = np.log(x) + np.log(y) - ls
    xi = np.exp(log_xi)
    val = 0.5 * log_xi - 0.5 * ls + log_bessel_i(alpha, xi) - 0.5 * (x * x + y * y) / np.tanh(2.0 * t)
    return _out(val if log else np.exp(val))


# ---------------------------------------------------------------------------
# Bessel Poisson kernel


def poisson_bessel(lam, t, x, y, tol=1e-11):
    """:math:`P_t^{\\mathfrak{B}_\\lambda}(x,y)` by adaptive quadrature in :math:`\\theta`.

    The endpoint factors :math:`\\theta^{2\\lambda-1}` and
    :math:`(\\pi-\\theta)^{2\\lambda-1}` go into algebraic weights (QUADPACK
    QAWS) on the two halves of :math:`[0,\\pi]`, leaving a smooth integrand
    whose peak at :math:`\\theta = 0` is resolved by bisection.
    """
    if not lam > 0:
        raise DomainError("bessel kernel requires lam > 0")
    if not (t > 0 and x > 0 and y > 0):
        raise DomainError("bessel kernel requires t, x, y > 0")
    a = 2.0 * lam - 1.0
    c = t * t + (x - y) ** 2

    def smooth(theta, other):
        # sin(theta)^a divided by theta^a near 0 (or (pi - theta)^a near pi)
        d = theta if other == 0 else math.pi - theta
        ratio = math.sin(theta) / d if d > 0 else 1.0
        return ratio ** a / (c + 2 * x * y * (1 - math.cos(theta))) ** (lam + 1)

    half = 0.5 * math.pi
    total = 0.0
    for lo, hi, wvar, side in ((0.0, half, (a, 0.0), 0), (half, math.pi, (0.0, a), 1)):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            val, err = _integrate.quad(smooth, lo, hi, args=(side,), weight="alg", wvar=wvar, epsabs=0.0, epsrel=tol, limit=400)
        if caught and err > 100 * tol * abs(val):
            raise AccuracyError("bessel kernel quadrature did not converge", val, err)
        total += val
    return 2 * lam * (x * y) ** lam * t / math.pi * total


def bessel_theta_rule(lam, width, n_panels=10, n_nodes=12, n_end=16):
    r"""Batched rule for :math:`\int_0^\pi (\sin\theta)^{2\lambda-1} g(\theta)\,d\theta`.

    ``width`` (array) is the peak width of ``g`` at :math:`\theta=0`.  On
    :math:`[0,\pi/2]` the panels are geometric from ``width``; the first
    panel uses Gauss-Jacobi with weight :math:`\theta^{2\lambda-1}`.  The
    piece :math:`[\pi/2,\pi]` uses Gauss-Jacobi with weight
    :math:`(\pi-\theta)^{2\lambda-1}`.  Returned weights already include the
    :math:`(\sin\theta)^{2\lambda-1}` factor.
    """
    a = 2.0 * lam - 1.0
    width = np.minimum(np.asarray(width, dtype=float), math.pi / 4)
    half = math.pi / 2
    # first panel [0, width], Jacobi in theta
    u, wu = _jacobi01(n_nodes, a, 0.0)
    th0 = width[..., None] * u
    w0 = width[..., None] ** (a + 1) * wu * np.where(th0 > 0, (np.sin(th0) / th0) ** a, 1.0)
    # geometric panels [width, pi/2]
    ratio = (half / width) ** (1.0 / max(n_panels - 1, 1))
    edges = width[..., None] * ratio[..., None] ** np.arange(n_panels)
    edges[..., -1] = half
    thm, wm = gauss_legendre(n_nodes, edges[..., :-1], edges[..., 1:])
    shp = width.shape + ((n_panels - 1) * n_nodes,)
    thm = thm.reshape(shp)
    wm = wm.reshape(shp) * np.sin(thm) ** a
    # end piece [pi/2, pi], Jacobi in (pi - theta)
    ue, we = _jacobi01(n_end, 0.0, a)
    the = half + half * ue
    wend = half ** (a + 1) * we * np.where(ue < 1, (np.sin(the) / (math.pi - the)) ** a, 1.0)
    the = np.broadcast_to(the, width.shape + (n_end,))
    wend = np.broadcast_to(wend, width.shape + (n_end,))
    return np.concatenate([th0, thm, the], axis=-1), np.concatenate([w0, wm, wend], axis=-1)


def poisson_bessel_array(lam, t, x, y):
    """Vectorized Bessel Poisson kernel through :func:`bessel_theta_rule`."""
    t, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
    width = np.sqrt((t * t + (x - y) ** 2) / (x * y))
    th, w = bessel_theta_rule(lam, width)
    A = (x - y)[..., None] ** 2 + 2 * (x * y)[..., None] * (1 - np.cos(th))
    tt = t[..., None]
    val = np.sum(w * tt / (tt * tt + A) ** (lam + 1), axis=-1)
    return _out(2 * lam * (x * y) ** lam / math.pi * val)


# ---------------------------------------------------------------------------
# subordination


def subordination_weight(t, u):
    """One-sided stable density :math:`\\frac{t}{2\\sqrt\\pi}e^{-t^2/4u}u^{-3/2}`."""
    u = np.asarray(u, dtype=float)
    return t / (2 * math.sqrt(math.pi)) * np.exp(-t * t / (4 * u)) * u ** -1.5


def poisson_subordinate(heat_kernel, t, x, y, tol=1e-11):
    """Poisson kernel obtained from a heat kernel by subordination.

    ``heat_kernel(u, x, y)`` is integrated against the stable weight.  The
    ``u``-range is split at ``u = t**2``; the tail ``[t**2, inf)`` is mapped
    by ``u = t**2/w`` onto ``(0, 1]``, leaving an integrable
    :math:`w^{-1/2}` endpoint.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    t2 = t * t
    head = integrate_adaptive(lambda u: subordination_weight(t, u) * heat_kernel(u, x, y), 0.0, t2, tol=tol)

    def tail(w):
        if w <= 0:
            return 0.0
        return math.exp(-w / 4) / (2 * math.sqrt(math.pi * w)) * heat_kernel(t2 / w, x, y)

    rest = integrate_adaptive(tail, 0.0, 1.0, tol=tol)
    return head.value + rest.value


# ---------------------------------------------------------------------------
# Hankel transform


def hankel_kernel(lam, arg):
    r""":math:`\sqrt{s}\,J_{\lambda-1/2}(s)` for ``s > 0``.

    Orders below zero (``lam < 1/2``) are outside :func:`bessel_j` and go
    straight to :func:`scipy.special.jv`; the product still behaves like
    :math:`s^\lambda` at the origin.
    """
    arg = np.asarray(arg, dtype=float)
    nu = lam - 0.5
    j = bessel_j(nu, arg) if nu >= 0 else _sp.jv(nu, arg)
    return np.sqrt(arg) * j


def hankel_transform(lam, f, xi, tol=1e-10, min_nodes=64):
    r""":math:`h_\lambda(f)(\xi) = \int_0^\infty \sqrt{\xi y}J_{\lambda-1/2}(\xi y)f(y)\,dy`.

    ``f`` is a :class:`~conetent.sampled.SampledFunction` (or any callable
    with a ``support`` attribute) whose support bounds the integral.
    Composite Gauss-Legendre with enough nodes to resolve
    ``xi * (b - a) / pi`` oscillations; the rule is doubled until two
    consecutive results agree to ``tol``.  Vectorized over ``xi``.
    """
    if not lam > 0:
        raise DomainError("hankel_transform requires lam > 0")
    xi = np.asarray(xi, dtype=float)
    if np.any(~(xi > 0)):
        raise DomainError("hankel_transform requires xi > 0")
    a, b = f.support
    a = max(a, 0.0)
    osc = float(np.max(xi)) * (b - a) / math.pi
    n = int(max(min_nodes, 16 * math.ceil(osc + 1)))
    prev = None
    for _ in range(6):
        panels = max(1, n // 16)
        edges = np.linspace(a, b, panels + 1)
        y, w = gauss_legendre(16, edges[:-1], edges[1:])
        y, w = y.ravel(), w.ravel()
        wf = w * f(y)
        flat = xi.ravel()
        val = np.empty(flat.size)
        step = max(1, 2_000_000 // y.size)
        for lo in range(0, flat.size, step):
            arg = flat[lo:lo + step, None] * y
            val[lo:lo + step] = hankel_kernel(lam, arg) @ wf
        val = val.reshape(xi.shape)
        if prev is not None and np.max(np.abs(val - prev)) <= tol * max(1.0, float(np.max(np.abs(val)))):
            return _out(val)
        prev = val
        n *= 2
    return _out(val)


# ---------------------------------------------------------------------------
# Hermite critical radius


def critical_radius_hermite(x, dim=1):
    """Representative critical radius: 1/2 inside the unit ball, 1/(1+|x|) outside.

    With ``dim = 1`` the input holds coordinates elementwise; otherwise the
    last axis (of length ``dim``) holds the components of each point.
    """
    x = np.asarray(x, dtype=float)
    if dim == 1:
        r = np.abs(x)
    else:
        if x.shape[-1:] != (dim,):
            raise DomainError("last axis must hold the point components")
        r = np.linalg.norm(x, axis=-1)
    return _out(np.where(r < 1, 0.5, 1.0 / (1.0 + r)))
