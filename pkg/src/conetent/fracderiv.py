r"""Fractional time derivatives of Poisson semigroups.

The derivative of order :math:`\beta` with :math:`m = \lfloor\beta\rfloor+1`,

.. math:: \partial_t^\beta F(t) = \frac{e^{-i\pi(m-\beta)}}{\Gamma(m-\beta)}
          \int_0^\infty \partial_t^m F(t+s)\, s^{m-\beta-1}\, ds,

is evaluated three ways: directly (:func:`frac_dt_sw`), through the Fourier
symbol :math:`e^{i\pi\beta}|\xi|^\beta e^{-t|\xi|}`
(:func:`frac_dt_poisson_fourier`) and through eigenfunction expansions
(:func:`frac_dt_spectral`).  Since
:math:`e^{-i\pi(m-\beta)} = (-1)^m e^{i\pi\beta}`, every real ``F`` has
:math:`\partial_t^\beta F = e^{i\pi\beta}\times` a real number; the
vectorized kernel code works with that real "dephased" part and attaches
the phase at the end.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math
import warnings

import numpy as np
from scipy import integrate as _integrate

from .errors import AccuracyError, CapabilityError, DomainError
from .kernels import (
    MAX_TIME_ORDER,
    SettingDescriptor,
    dt_power_family,
    heat_hermite,
    hankel_kernel,
    hankel_transform,
    heat_laguerre,
    poisson_classical_dtm,
    bessel_theta_rule,
)
from .quadrature import (
    _jacobi01,
    exponential_halfline_rule,
    gauss_legendre,
    log_panels_rule,
)
from .specfun import hermite_functions, laguerre_functions

__all__ = [
    "FractionalOrder",
    "SpectralProfile",
    "frac_dt_sw",
    "finite_difference_derivatives",
    "frac_dt_poisson_fourier",
    "fourier_transform",
    "frac_dt_spectral",
    "hermite_eigenvalues",
    "hermite_profile",
    "laguerre_eigenvalues",
    "laguerre_profile",
    "frac_poisson_kernel",
    "frac_poisson_kernel_real",
    "subordination_profile",
    "poisson_apply",
]


@dataclass(frozen=True)
class FractionalOrder:
    """Order ``beta > 0`` with its integer ceiling ``m = floor(beta) + 1``."""

    beta: float
    m: int = field(init=False)
    phase: complex = field(init=False)

    def __post_init__(self):
        b = float(self.beta)
        if not b > 0 or not math.isfinite(b):
            raise DomainError("fractional order must be a positive real")
        m = math.floor(b) + 1
        if m > MAX_TIME_ORDER:
            raise CapabilityError(f"orders beta >= {MAX_TIME_ORDER} are not supported")
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "phase", complex(math.cos(math.pi * b), math.sin(math.pi * b)))

    @property
    def prefactor(self):
        """:math:`e^{-i\\pi(m-\\beta)}/\\Gamma(m-\\beta)`."""
        a = self.m - self.beta
        return complex(math.cos(math.pi * a), -math.sin(math.pi * a)) / math.gamma(a)

    @property
    def real_prefactor(self):
        """:math:`(-1)^m/\\Gamma(m-\\beta)`, the prefactor with the phase removed."""
        return (-1) ** self.m / math.gamma(self.m - self.beta)


def _order(beta):
    return beta if isinstance(beta, FractionalOrder) else FractionalOrder(beta)


def _phase(beta):
    return complex(math.cos(math.pi * beta), math.sin(math.pi * beta))


def _out(a):
    return a if np.ndim(a) else complex(a) if np.iscomplexobj(a) else float(a)


# ---------------------------------------------------------------------------
# direct route


def _sw_rule(order, decay, n, scale):
    """Nodes ``s`` and weights for ``int_0^inf G(s) s^(m-beta-1) ds``."""
    a0 = order.m - order.beta - 1.0
    kind = decay[0]
    if kind == "exponential":
        rate = float(decay[1])
        x, w = exponential_halfline_rule(n, a0)
        return x / rate, w * np.exp(x) / rate ** (a0 + 1.0)
    if kind == "algebraic":
        p = float(decay[1])
        ainf = p - a0 - 2.0
        if ainf <= -1:
            raise DomainError("the s-integral diverges for this decay rate")
        u, w = _jacobi01(n, a0, ainf)
        sig = u / (1.0 - u)
        return scale * sig, w * scale ** (a0 + 1.0) * (1.0 + sig) ** p
    raise DomainError(f"unknown decay hint {decay!r}")


def frac_dt_sw(F, order, t, tol=1e-10, decay=None, scale=None, nodes=48):
    r""":math:`\partial_t^\beta F(t)` by quadrature of the defining integral.

    ``F(tau, m)`` must return :math:`\partial^m F(\tau)` (vectorized in
    ``tau``); returning ``None`` or raising ``NotImplementedError`` means
    that derivative is unavailable.  ``decay`` describes
    :math:`\partial^m F`: ``("exponential", rate)`` or
    ``("algebraic", p)`` for :math:`|\partial^m F(\tau)| \lesssim \tau^{-p}`
    (default ``p = m + 1``).  A Gauss rule adapted to
    :math:`s^{m-\beta-1}` and to the decay is applied with ``nodes`` and
    ``2 * nodes`` points; if they disagree by more than ``tol`` the
    integral is redone adaptively.
    """
    order = _order(order)
    if not t > 0:
        raise DomainError("t must be positive")
    m = order.m
    if decay is None:
        decay = ("algebraic", m + 1.0)
    if scale is None:
        scale = 1.0 + t

    def dm(tau):
        try:
            v = F(tau, m)
        except NotImplementedError as exc:
            raise CapabilityError(f"derivative of order {m} unavailable") from exc
        if v is None:
            raise CapabilityError(f"derivative of order {m} unavailable")
        return np.asarray(v)

    vals = []
    for n in (nodes, 2 * nodes):
        s, w = _sw_rule(order, decay, n, scale)
        vals.append(np.sum(w * dm(t + s)))
    integral = vals[1]
    if abs(vals[1] - vals[0]) > tol * max(1.0, abs(vals[1])):
        integral = _sw_adaptive(dm, order, t, tol, scale)
    return complex(order.prefactor * integral)


def _sw_adaptive(dm, order, t, tol, scale):
    a0 = order.m - order.beta - 1.0

    def part(fn):
        head, e1 = _integrate.quad(lambda s: fn(dm(t + s)), 0.0, scale, weight="alg", wvar=(a0, 0.0), epsabs=tol * 1e-2, epsrel=tol, limit=400)
        tail, e2 = _integrate.quad(lambda s: fn(dm(t + s)) * s ** a0, scale, np.inf, epsabs=tol * 1e-2, epsrel=tol, limit=400)
        return head + tail, e1 + e2

    re, er = part(lambda v: float(np.real(v)))
    im, ei = part(lambda v: float(np.imag(v)))
    val = complex(re, im)
    if er + ei > 100 * tol * max(1.0, abs(val)):
        raise AccuracyError("fractional derivative integral did not converge", estimate=val, est_error=er + ei)
    return val


def finite_difference_derivatives(F0, h=1e-2, order=8):
    """Wrap a plain callable ``F0(tau)`` as ``F(tau, m)`` via central differences.

    Fornberg weights on ``2 * order + 1`` points of spacing ``h``.  Only for
    inputs without analytic derivatives; accuracy is limited accordingly.
    """
    offsets = np.arange(-order, order + 1, dtype=float)

    def weights(m):
        # Fornberg: solve the Vandermonde system for exact polynomials
        V = np.vander(offsets, increasing=True).T
        rhs = np.zeros(offsets.size)
        rhs[m] = math.factorial(m)
        return np.linalg.solve(V, rhs)

    cache = {}

    def F(tau, m):
        if m >= offsets.size:
            return None
        if m not in cache:
            cache[m] = weights(m)
        tau = np.asarray(tau, dtype=float)
        vals = np.stack([F0(tau + o * h) for o in offsets], axis=-1)
        return vals @ cache[m] / h ** m

    return F


# ---------------------------------------------------------------------------
# Fourier route


def fourier_transform(f, xi, min_nodes=64):
    r""":math:`\hat f(\xi) = \int f(x) e^{-ix\xi}\,dx` over the support of ``f``."""
    xi = np.asarray(xi, dtype=float)
    a, b = f.support
    osc = float(np.max(np.abs(xi), initial=0.0)) * (b - a) / math.pi
    panels = max(min_nodes // 16, int(math.ceil(osc / 2 + (b - a) / f.scale * 2)))
    edges = np.linspace(a, b, panels + 1)
    x, w = gauss_legendre(16, edges[:-1], edges[1:])
    x, w = x.ravel(), w.ravel()
    wf = w * f(x)
    return np.exp(-1j * xi[..., None] * x) @ wf


def frac_dt_poisson_fourier(f, beta, t, y, tol=1e-11):
    r""":math:`\partial_t^\beta P_t(f)(y)` on the line from the Fourier symbol.

    Evaluates :math:`e^{i\pi\beta}\frac1\pi\int_0^\infty
    \operatorname{Re}[e^{iy\xi}\hat f(\xi)]\,\xi^\beta e^{-t\xi}\,d\xi` for
    real ``f``, with :math:`\hat f` computed by quadrature.  ``beta = 0``
    gives :math:`P_t(f)(y)`.  No :math:`t^\beta` factor.

    The frequency integral uses a Gauss-Jacobi panel for :math:`\xi^\beta`
    at the origin and composite Gauss-Legendre beyond, doubled until two
    passes agree to ``tol``.
    """
    if not beta >= 0:
        raise DomainError("beta must be nonnegative")
    if not t > 0:
        raise DomainError("t must be positive")
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    # frequency cutoff: symbol and transform both negligible beyond it
    probe = np.geomspace(1e-3 / f.scale, 45.0 / t, 141)
    mag = np.abs(fourier_transform(f, probe)) * probe ** beta * np.exp(-t * probe)
    # the computed transform has a rounding floor near 1e-16 of its peak
    big = np.nonzero(mag > 1e-15 * float(mag.max()))[0]
    cut = min(45.0 / t, float(probe[min(big[-1] + 1, probe.size - 1)]))
    a, b = f.support
    reach = float(np.max(np.abs(yv - 0.5 * (a + b)))) + 0.5 * (b - a) + f.scale
    head = min(cut, 1.0 / reach, 0.5 / f.scale)
    panels = max(8, int(math.ceil((cut - head) * reach / math.pi)))
    prev = None
    for _ in range(6):
        u, wu = _jacobi01(24, beta, 0.0)
        xi0, w0 = head * u, head ** (beta + 1.0) * wu
        edges = np.linspace(head, cut, panels + 1)
        xi1, w1 = gauss_legendre(16, edges[:-1], edges[1:])
        xi1, w1 = xi1.ravel(), w1.ravel() * xi1.ravel() ** beta
        xi = np.concatenate([xi0, xi1])
        w = np.concatenate([w0, w1]) * np.exp(-t * xi)
        fh = fourier_transform(f, xi)
        val = np.real(np.exp(1j * yv[:, None] * xi) * fh) @ w / math.pi
        if prev is not None and np.max(np.abs(val - prev)) <= tol * max(1e-300, float(np.max(np.abs(val)))):
            break
        prev = val
        panels *= 2
    else:
        raise AccuracyError("frequency integral did not converge", estimate=val)
    out = _phase(beta) * val
    return complex(out[0]) if np.ndim(y) == 0 else out.reshape(np.shape(y))


# ---------------------------------------------------------------------------
# spectral route


@dataclass(frozen=True, eq=False)
class SpectralProfile:
    """Expansion coefficients of a function in an eigenbasis.

    ``basis`` is ``("hermite",)`` or ``("laguerre", alpha)``.  The
    eigenvalues are those of the operator whose square root generates the
    Poisson semigroup: ``2k + 1`` for Hermite (one dimension) and
    ``2(2k + alpha + 1)`` for Laguerre unless another convention is passed.
    """

    coefficients: np.ndarray
    eigenvalues: np.ndarray
    basis: tuple

    def __post_init__(self):
        c = np.array(self.coefficients)
        lam = np.array(self.eigenvalues, dtype=float)
        if c.ndim < 1 or c.shape[0] < 1:
            raise DomainError("a profile needs at least one coefficient")
        if lam.shape != (c.shape[0],):
            raise DomainError("one eigenvalue per coefficient required")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        if np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
            raise DomainError("eigenvalues must be positive and strictly increasing")
        if self.basis[0] not in ("hermite", "laguerre"):
            raise DomainError("basis must be hermite or laguerre")
        c.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def K(self):
        return self.coefficients.shape[0]

    def basis_values(self, x, K=None):
        """Eigenfunctions ``0..K-1`` at ``x``, shape ``(K,) + x.shape``."""
        K = self.K if K is None else K
        if self.basis[0] == "hermite":
            return hermite_functions(K - 1, x)
        return laguerre_functions(self.basis[1], K - 1, x)

    def truncated(self, K):
        return SpectralProfile(self.coefficients[:K], self.eigenvalues[:K], self.basis)


def hermite_eigenvalues(K):
    return 2.0 * np.arange(K) + 1.0


def laguerre_eigenvalues(alpha, K, convention="operator"):
    """``2(2k+alpha+1)`` (``"operator"``) or ``2k+alpha+1`` (``"bracket"``)."""
    base = 2.0 * np.arange(K) + alpha + 1.0
    if convention == "operator":
        return 2.0 * base
    if convention == "bracket":
        return base
    raise DomainError(f"unknown eigenvalue convention {convention!r}")


def _projection_rule(lo, hi, scale, K):
    # panels fine enough for both f and the K-th eigenfunction
    width = min(scale / 2, 0.5 / math.sqrt(2 * K + 2))
    panels = max(4, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, panels + 1)
    x, w = gauss_legendre(16, edges[:-1], edges[1:])
    return x.ravel(), w.ravel()


def hermite_profile(f, K):
    """Coefficients :math:`c_k = \\int h_k f` for ``k < K`` (one dimension)."""
    a, b = f.support
    x, w = _projection_rule(a, b, f.scale, K)
    c = hermite_functions(K - 1, x) @ (w[:, None] * f(x).reshape(x.size, -1))
    c = c[:, 0] if np.ndim(f.values) == 1 else c
    return SpectralProfile(c, hermite_eigenvalues(K), ("hermite",))


def laguerre_profile(f, alpha, K, convention="operator"):
    """Coefficients :math:`c_k^\\alpha = \\int_0^\\infty \\varphi_k^\\alpha f` for ``k < K``."""
    a, b = f.support
    if a < 0:
        raise DomainError("laguerre expansions need functions on the half-line")
    x, w = _projection_rule(a, b, f.scale, K)
    c = laguerre_functions(alpha, K - 1, x) @ (w[:, None] * f(x).reshape(x.size, -1))
    c = c[:, 0] if np.ndim(f.values) == 1 else c
    return SpectralProfile(c, laguerre_eigenvalues(alpha, K, convention), ("laguerre", float(alpha)))


def _spectral_sum(profile, beta, t, x, K):
    lam = profile.eigenvalues[:K]
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    phi = profile.basis_values(x, K)  # (K,) + x.shape
    c = profile.coefficients[:K]
    sh = (K,) + (1,) * np.broadcast(t, x).ndim
    decay = lam.reshape(sh) ** (beta / 2.0) * np.exp(-np.sqrt(lam).reshape(sh) * t[None])
    if c.ndim == 1:
        return np.sum(c.reshape(sh) * decay * phi, axis=0)
    # vector valued: last axis of the result indexes components
    return np.einsum("k...,kd->...d", decay * phi, c)


def frac_dt_spectral(profile, beta, t, x, tol=1e-8, check=True):
    r""":math:`e^{i\pi\beta}\sum_{k<K}\lambda_k^{\beta/2}e^{-t\sqrt{\lambda_k}}c_k\varphi_k(x)`.

    No :math:`t^\beta` factor.  With ``check`` the truncation error is
    estimated by comparing with the first ``K/2`` terms.
    """
    if not beta >= 0:
        raise DomainError("beta must be nonnegative")
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("t must be positive")
    full = _spectral_sum(profile, beta, t, x, profile.K)
    if check and profile.K >= 2:
        half = _spectral_sum(profile, beta, t, x, max(1, profile.K // 2))
        err = float(np.max(np.abs(full - half), initial=0.0))
        ref = max(1.0, float(np.max(np.abs(full), initial=0.0)))
        if err > tol * ref:
            raise AccuracyError("eigen expansion truncated too early", estimate=full, est_error=err)
    return _out(_phase(beta) * full)


# ---------------------------------------------------------------------------
# fractional Poisson kernels


def _classical_closed_real(beta, t, z):
    # t^beta Gamma(beta+1)/pi Re[(t + i z)^(-beta-1)]
    r = np.hypot(t, z)
    ang = np.arctan2(z, t)
    return math.gamma(beta + 1.0) / math.pi * t ** beta * r ** (-beta - 1.0) * np.cos((beta + 1.0) * ang)


def _sw_real_vectorized(dm, order, t, scale, p, n):
    """Dephased :math:`t^\\beta\\partial_t^\\beta` of a family with known ``dm``.

    ``dm(tau)`` broadcasts against ``t[..., None]``; ``p`` is its algebraic
    decay rate in ``tau``; ``scale`` the length scale of the decay.
    """
    a0 = order.m - order.beta - 1.0
    ainf = p - a0 - 2.0
    u, w = _jacobi01(n, a0, ainf)
    sig = u / (1.0 - u)
    L = np.asarray(scale, dtype=float)[..., None]
    vals = dm(np.asarray(t)[..., None] + L * sig)
    integral = np.sum(w * (1.0 + sig) ** p * vals, axis=-1) * np.asarray(scale) ** (a0 + 1.0)
    return order.real_prefactor * np.asarray(t) ** order.beta * integral


def _classical_real(n, beta, t, x, y, route, nodes):
    if n == 1:
        z = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        r = np.abs(z)
    else:
        z = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        r = np.linalg.norm(z, axis=-1)
    t = np.asarray(t, dtype=float)
    if beta == 0:
        return math.gamma((n + 1) / 2) / math.pi ** ((n + 1) / 2) * t / (t * t + r * r) ** ((n + 1) / 2)
    if route == "auto" and beta == int(beta):
        # integer orders: analytic derivative, dephased by (-1)^beta
        return (-1) ** int(beta) * t ** beta * poisson_classical_dtm(n, int(beta), t, z)
    if route in ("auto", "closed") and n == 1:
        return _classical_closed_real(beta, t, r)
    if route == "closed":
        raise CapabilityError("closed-form fractional kernel is one-dimensional only")
    order = FractionalOrder(beta)
    t, r = np.broadcast_arrays(t, r)
    dm = lambda tau: poisson_classical_dtm(n, order.m, tau, r[..., None] if n == 1 else _radial(r, n))
    return _sw_real_vectorized(dm, order, t, t + r, n + order.m, nodes)


def _radial(r, n):
    # points at distance r on the first axis, for radial kernels
    z = np.zeros(r.shape + (1, n))
    z[..., 0, 0] = r
    return z


@lru_cache(maxsize=64)
def subordination_profile(beta, lo=1e-10, mid=0.5, hi=9.0, nodes_per_decade=14):
    r"""Nodes, ``dtau`` weights and dephased :math:`\tau^{\beta-1}G_\beta(\tau)`.

    :math:`G_\beta` is the fractional derivative of
    :math:`g(\tau) = \tau e^{-\tau^2}`, computed once per order with
    :math:`g^{(m)}(\tau) = \tfrac{(-1)^m}{2}H_{m+1}(\tau)e^{-\tau^2}`.
    Nodes are log spaced below ``mid`` and uniform Gauss panels above,
    where the profile has Gaussian-scale structure.
    """
    t_log, w_log = log_panels_rule(lo, mid, nodes_per_decade)
    edges = np.arange(mid, hi + 1e-12, 0.25)
    t_lin, w_lin = gauss_legendre(16, edges[:-1], edges[1:])
    tau = np.concatenate([t_log, t_lin.ravel()])
    w = np.concatenate([w_log * t_log, w_lin.ravel()])
    if beta == 0:
        prof = np.exp(-tau * tau)
    else:
        order = FractionalOrder(beta)
        m = order.m
        a0 = m - beta - 1.0
        coef = np.zeros(m + 2)
        coef[m + 1] = 1.0
        herm = np.polynomial.hermite.Hermite(coef)

        def gm(x):
            return 0.5 * (-1) ** m * herm(x) * math.exp(-x * x)

        vals = np.empty(tau.size)
        # roundoff warnings only occur where the profile is negligible
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", _integrate.IntegrationWarning)
            for i, s0 in enumerate(tau):
                top = max(12.0 - s0, 2.0)
                v, _ = _integrate.quad(lambda s: gm(s0 + s), 0.0, top, weight="alg", wvar=(a0, 0.0), epsabs=1e-14, epsrel=1e-12, limit=400)
                vals[i] = v
        prof = order.real_prefactor * vals * tau ** (beta - 1.0)
    for a in (tau, w, prof):
        a.setflags(write=False)
    return tau, w, prof


def _subordinated_real(log_heat, beta, t, x, y):
    r"""Dephased :math:`t^\beta\partial_t^\beta` of a subordinated Poisson kernel.

    Uses :math:`(2/\sqrt\pi)\int_0^\infty \tau^{\beta-1}G_\beta(\tau)
    W_{t^2/4\tau^2}(x,y)\,d\tau`; ``log_heat(u, x, y)`` is the log of the
    heat kernel.
    """
    tau, w, prof = subordination_profile(float(beta))
    t, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
    u = (t[..., None] / (2.0 * tau)) ** 2
    lw = log_heat(u, x[..., None], y[..., None])
    return 2.0 / math.sqrt(math.pi) * np.sum(w * prof * np.exp(lw), axis=-1)


def _bessel_real(lam, beta, t, x, y, nodes):
    t, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
    width = np.sqrt((t * t + (x - y) ** 2) / (x * y))
    th, w = bessel_theta_rule(lam, width)
    A = (x - y)[..., None] ** 2 + 2 * (x * y)[..., None] * (1 - np.cos(th))
    tt = np.broadcast_to(t[..., None], A.shape)
    if beta == 0:
        inner = tt / (tt * tt + A) ** (lam + 1)
    else:
        order = FractionalOrder(beta)
        dm = lambda tau: dt_power_family(order.m, tau, A[..., None], lam + 1.0)
        inner = _sw_real_vectorized(dm, order, tt, tt + np.sqrt(A), 2 * lam + 1 + order.m, nodes)
    return 2 * lam * (x * y) ** lam / math.pi * np.sum(w * inner, axis=-1)


_KERNEL_ROUTES = {
    "hermite": ("auto", "subordination"),
    "laguerre": ("auto", "subordination"),
    "bessel": ("auto", "theta"),
}


def frac_poisson_kernel_real(setting, beta, t, x, y, route="auto", nodes=32):
    r"""Real part of :math:`e^{-i\pi\beta}\,t^\beta\partial_t^\beta P_t(x,y)`.

    Routes: classical ``"closed"`` (one dimension) or ``"sw"``; Hermite and
    Laguerre ``"subordination"``; Bessel ``"theta"`` (fractional derivative
    under the angular integral).  Vectorized over ``t, x, y``.
    """
    if not isinstance(setting, SettingDescriptor):
        raise DomainError("setting must be a SettingDescriptor")
    beta = float(beta)
    if not beta >= 0:
        raise DomainError("beta must be nonnegative")
    if np.any(~(np.asarray(t) > 0)):
        raise DomainError("t must be positive")
    fam = setting.family
    if fam == "classical":
        return _classical_real(setting.n, beta, t, x, y, route, nodes)
    if route not in _KERNEL_ROUTES[fam]:
        raise CapabilityError(f"route {route!r} is not available for {fam} kernels")
    if fam == "hermite":
        if setting.n != 1:
            raise CapabilityError("fractional Hermite kernels are implemented for n = 1")
        fn = lambda a, b, c: _subordinated_real(lambda u, p, q: heat_hermite(1, u, p, q, log=True), beta, a, b, c)
    elif fam == "laguerre":
        al = setting.alpha
        fn = lambda a, b, c: _subordinated_real(lambda u, p, q: heat_laguerre(al, u, p, q, log=True), beta, a, b, c)
    else:
        fn = lambda a, b, c: _bessel_real(setting.lam, beta, a, b, c, nodes)
    return _pointwise_chunked(fn, t, x, y)


def _pointwise_chunked(fn, t, x, y, step=512):
    # bounded memory: the quadrature axes multiply the point count
    t, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
    if t.size <= step:
        return fn(t, x, y)
    ft, fx, fy = t.ravel(), x.ravel(), y.ravel()
    out = np.empty(ft.size)
    for lo in range(0, ft.size, step):
        sl = slice(lo, lo + step)
        out[sl] = fn(ft[sl], fx[sl], fy[sl])
    return out.reshape(t.shape)


def frac_poisson_kernel(setting, beta, t, x, y, route="auto", nodes=32):
    r""":math:`t^\beta\partial_t^\beta P_t(x,y)` in the given setting (complex)."""
    val = frac_poisson_kernel_real(setting, beta, t, x, y, route, nodes)
    return _out(_phase(beta) * np.asarray(val))


# ---------------------------------------------------------------------------
# applying the fractional Poisson operator to a function


def _z_rule(a, b, y, t, width, n_nodes, max_levels=48):
    """Per-point composite Gauss rule on ``[a, b]`` graded toward ``y``.

    Uniform panels of size ``width`` for the function, plus geometric
    panels around the nearest support point at scale
    ``max(t, dist(y, [a, b]))`` for the kernel.  Shapes are fixed per call;
    surplus panels collapse to zero width.
    """
    n_uni = max(1, int(math.ceil((b - a) / width)))
    uni = np.linspace(a, b, n_uni + 1)
    c = np.clip(y, a, b)
    s0 = 0.5 * np.maximum(t, np.abs(y - c))
    levels = int(min(max_levels, max(1, math.ceil(math.log2((b - a) / max(float(np.min(s0)), 1e-300))) + 1)))
    off = s0[:, None] * 2.0 ** np.arange(levels)
    geo = np.concatenate([c[:, None] - off, c[:, None], c[:, None] + off], axis=1)
    edges = np.concatenate([np.broadcast_to(uni, (y.size, uni.size)), np.clip(geo, a, b)], axis=1)
    edges.sort(axis=1)
    z, w = gauss_legendre(n_nodes, edges[:, :-1], edges[:, 1:])
    return z.reshape(y.size, -1), w.reshape(y.size, -1)


def _chunks(size, per_point, budget=3_000_000):
    step = max(1, budget // max(per_point, 1))
    for lo in range(0, size, step):
        yield slice(lo, min(size, lo + step))


def poisson_apply(setting, beta, f, y, t, route="auto", profile=None, n_nodes=16, K=64):
    r""":math:`t^\beta\partial_t^\beta P_t(f)(y)` at paired points ``(y, t)``.

    Routes: ``"kernel"`` integrates the fractional kernel against ``f`` over
    its support (all settings); ``"spectral"`` sums the eigen expansion
    (Hermite, Laguerre); ``"hankel"`` multiplies the Hankel transform by
    the symbol :math:`e^{i\pi\beta}(t\xi)^\beta e^{-t\xi}` (Bessel).
    ``"auto"`` picks spectral for Hermite and Laguerre
    and kernel otherwise.  ``beta = 0`` gives :math:`P_t(f)(y)`.  Vector
    valued ``f`` gives a trailing component axis.
    """
    beta = float(beta)
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    y, t = np.broadcast_arrays(y, t)
    shape = y.shape
    fam = setting.family
    if fam == "classical" and setting.n != 1:
        raise CapabilityError("applying the semigroup is implemented in one dimension")
    if route == "auto":
        route = "spectral" if fam in ("hermite", "laguerre") else "kernel"
    if route == "spectral":
        if fam not in ("hermite", "laguerre"):
            raise CapabilityError(f"no eigen expansion for the {fam} setting")
        if profile is None:
            profile = hermite_profile(f, K) if fam == "hermite" else laguerre_profile(f, setting.alpha, K)
        val = frac_dt_spectral(profile, beta, t, y, check=False)
        tb = t ** beta if np.ndim(val) == t.ndim else (t ** beta)[..., None]
        return np.asarray(val) * tb
    if route == "hankel":
        if fam != "bessel":
            raise CapabilityError("the Hankel route applies to the Bessel setting")
        return _hankel_apply(setting.lam, beta, f, y, t)
    if route != "kernel":
        raise DomainError(f"unknown route {route!r}")
    a, b = f.support
    if setting.halfline:
        a = max(a, 0.0)
        if np.any(y <= 0):
            raise DomainError("half-line settings need y > 0")
    yf, tf = y.ravel(), t.ravel()
    d = f.dim
    out = np.zeros((yf.size, d))
    kroute = "closed" if fam == "classical" else "auto"
    width = max(f.scale / 4.0, 1e-12)
    levels = math.log2((b - a) / max(float(np.min(tf)), 1e-300)) + 2
    per_point = int((math.ceil((b - a) / width) + 2 * levels + 1) * n_nodes)
    inner = {"bessel": 4500, "hermite": 200, "laguerre": 200}.get(fam, 1)
    for sl in _chunks(yf.size, per_point * inner):
        z, w = _z_rule(a, b, yf[sl], tf[sl], width, n_nodes)
        if setting.halfline:
            # collapsed panels sit on the origin with zero weight
            z = np.maximum(z, 1e-300)
        k = frac_poisson_kernel_real(setting, beta, tf[sl][:, None], yf[sl][:, None], z, route=kroute)
        fz = f(z).reshape(z.shape + (d,))
        out[sl] = np.einsum("pj,pjd->pd", w * k, fz)
    out = _phase(beta) * out
    return out.reshape(shape) if d == 1 and np.ndim(f.values) == 1 else out.reshape(shape + (d,))


def _hankel_apply(lam, beta, f, y, t, tol=1e-13):
    r"""Bessel semigroup through the Hankel transform.

    :math:`h_\lambda f` is tabulated on a composite Gauss grid in
    :math:`\xi` up to where it and the symbol are negligible, then
    transformed back at every ``y``.
    """
    a, b = f.support
    a = max(a, 0.0)
    tmin = float(np.min(t))
    probe = np.geomspace(1e-3 / f.scale, min(1e4 / f.scale, 40.0 / tmin), 113)
    # probe upward in blocks and stop once a whole block is negligible
    peak, cut = 0.0, float(probe[-1])
    for lo in range(0, probe.size, 8):
        blk = probe[lo:lo + 8]
        mag = np.abs(hankel_transform(lam, f, blk)) * np.exp(-tmin * blk)
        if peak > 0 and float(mag.max()) <= tol * peak:
            cut = float(blk[0])
            break
        peak = max(peak, float(mag.max()))
    reach = float(np.max(y)) + b
    panels = max(8, int(math.ceil(cut * reach / math.pi)))
    edges = np.linspace(0.0, cut, panels + 1)
    xi, w = gauss_legendre(16, edges[:-1], edges[1:])
    xi, w = xi.ravel(), w.ravel()
    w = w * hankel_transform(lam, f, xi)
    yf, tf = y.ravel(), t.ravel()
    out = np.empty(yf.size)
    for sl in _chunks(yf.size, xi.size):
        arg = yf[sl, None] * xi
        sym = (tf[sl, None] * xi) ** beta * np.exp(-tf[sl, None] * xi)
        out[sl] = np.sum(hankel_kernel(lam, arg) * sym * w, axis=1)
    return (_phase(beta) * out).reshape(y.shape)
