r"""Special functions used by the kernel formulas.

Everything here is vectorized over the argument arrays and has no shared
mutable state.  Orders are scalars.

* :func:`gamma_fn` / :func:`log_gamma` -- Lanczos approximation (g=7, n=9).
* :func:`bessel_j` -- thin wrapper over :func:`scipy.special.jv`.
* :func:`bessel_i`, :func:`bessel_i_scaled`, :func:`log_bessel_i` -- power
  series below ``SeriesPolicy.series_cutoff`` and the large-argument
  expansion of :math:`\sqrt{2\pi z}\,e^{-z} I_\alpha(z)` above it.
* :func:`hermite_fn`, :func:`hermite_functions` -- normalized Hermite
  functions :math:`h_k(x) = (\sqrt{\pi}2^k k!)^{-1/2} e^{-x^2/2} H_k(x)`.
* :func:`laguerre_fn`, :func:`laguerre_functions` -- the system
  :math:`\varphi_k^\alpha(x) = (2\Gamma(k+1)/\Gamma(k+\alpha+1))^{1/2}
  e^{-x^2/2} x^{\alpha+1/2} \ell_k^\alpha(x^2)` on :math:`(0,\infty)`.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special as _sp

from .errors import CapabilityError, DomainError, RangeError

__all__ = [
    "SeriesPolicy",
    "DEFAULT_POLICY",
    "MAX_EIGEN_ORDER",
    "gamma_fn",
    "log_gamma",
    "bessel_j",
    "bessel_i",
    "bessel_i_scaled",
    "log_bessel_i",
    "hermite_fn",
    "hermite_functions",
    "laguerre_fn",
    "laguerre_functions",
]

#: Largest eigenfunction order the recurrences accept.
MAX_EIGEN_ORDER = 4096

# Rescale the running recurrence whenever it leaves [1/BIG, BIG].
_BIG = 1e150
_LOG_BIG = math.log(_BIG)


@dataclass(frozen=True)
class SeriesPolicy:
    """Regime switch for :math:`I_\\alpha`.

    ``series_cutoff`` is the argument above which the asymptotic expansion
    replaces the power series; ``max_terms`` bounds either sum and
    ``abs_tol`` is the relative size at which a term is considered
    negligible.
    """

    series_cutoff: float = 30.0
    max_terms: int = 400
    abs_tol: float = 1e-17

    def __post_init__(self):
        if not self.series_cutoff > 0:
            raise DomainError("series_cutoff must be positive")
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if self.max_terms < 8:
            raise DomainError("max_terms must be at least 8")


DEFAULT_POLICY = SeriesPolicy()


# ---------------------------------------------------------------------------
# Gamma

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_log(x):
    # log Gamma(x) for x >= 0.5
    z = x - 1.0
    acc = np.full_like(z, _LANCZOS_COEF[0])
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc = acc + c / (z + i)
    tt = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(tt) - tt + np.log(acc)


def log_gamma(x):
    """Natural log of :math:`\\Gamma(x)` for ``x > 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("log_gamma requires x > 0")
    small = xa < 0.5
    out = np.empty_like(xa)
    if np.any(~small):
        out[~small] = _lanczos_log(xa[~small])
    if np.any(small):
        xs = xa[small]
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        out[small] = math.log(math.pi) - np.log(np.sin(math.pi * xs)) - _lanczos_log(1.0 - xs)
    return out if out.ndim else float(out)


def gamma_fn(x):
    """Gamma function for positive arguments.

    Raises :class:`DomainError` for ``x <= 0``.  Overflows to ``inf`` past
    ``x ~ 171.6`` just like :func:`math.gamma` would raise.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("gamma_fn requires x > 0")
    # integers are exact via factorial; keeps Gamma(5) == 24 bit-for-bit
    out = np.exp(np.asarray(log_gamma(xa)))
    ints = (xa == np.round(xa)) & (xa <= 171)
    if np.any(ints):
        out = np.where(ints, _sp.factorial(np.where(ints, xa, 1) - 1, exact=False), out)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Bessel J


def bessel_j(nu, x):
    """:math:`J_\\nu(x)` for ``nu >= 0`` and ``x >= 0``."""
    xa = np.asarray(x, dtype=float)
    if nu < 0:
        raise DomainError("bessel_j requires nu >= 0")
    if np.any(xa < 0):
        raise DomainError("bessel_j requires x >= 0")
    if nu == 0.5:
        # elementary form, much cheaper than the general routine
        safe = np.where(xa > 0, xa, 1.0)
        out = np.where(xa > 0, np.sqrt(2.0 / (math.pi * safe)) * np.sin(xa), 0.0)
    else:
        out = _sp.jv(nu, xa)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# Modified Bessel I


def _log_i_series(alpha, z, policy):
    # log I_alpha(z) = alpha log(z/2) - lgamma(alpha+1) + log(sum r_k)
    # r_0 = 1, r_k = r_{k-1} (z/2)^2 / (k (k + alpha)); all terms positive.
    q = 0.25 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, policy.max_terms):
        term = term * q / (k * (k + alpha))
        total = total + term
        if np.all(term <= policy.abs_tol * total):
            break
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = alpha * np.log(0.5 * z)
    return lead - log_gamma(alpha + 1.0) + np.log(total)


def _log_i_asymptotic(alpha, z, policy):
    # sqrt(2 pi z) e^{-z} I_alpha(z) ~ sum_k (-1)^k a_k(alpha) / z^k
    mu = 4.0 * alpha * alpha
    term = np.ones_like(z)
    total = np.ones_like(z)
    prev = np.full_like(z, np.inf)
    live = np.ones(z.shape, dtype=bool)
    for k in range(1, policy.max_terms):
        nxt = -term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        # stop each entry once terms start growing (optimal truncation)
        live = live & (np.abs(nxt) < np.abs(prev)) & (np.abs(term) > policy.abs_tol * np.abs(total))
        if not np.any(live):
            break
        total = np.where(live, total + nxt, total)
        prev = np.abs(term)
        term = nxt
    return z - 0.5 * np.log(2.0 * math.pi * z) + np.log(total)


def log_bessel_i(alpha, z, policy=DEFAULT_POLICY):
    """:math:`\\log I_\\alpha(z)`; ``-inf`` at ``z = 0`` when ``alpha > 0``."""
    if not alpha > -0.5:
        raise DomainError("bessel_i requires alpha > -1/2")
    za = np.asarray(z, dtype=float)
    if np.any(~(za >= 0)):
        raise DomainError("bessel_i requires z >= 0")
    out = np.empty(za.shape)
    lo = za <= policy.series_cutoff
    if np.any(lo):
        out[lo] = _log_i_series(alpha, za[lo], policy)
    if np.any(~lo):
        out[~lo] = _log_i_asymptotic(alpha, za[~lo], policy)
    if alpha == 0:
        out[za == 0] = 0.0
    return out if out.ndim else float(out)


def bessel_i_scaled(alpha, z, policy=DEFAULT_POLICY):
    """:math:`e^{-z} I_\\alpha(z)`, finite for every ``z >= 0``."""
    za = np.asarray(z, dtype=float)
    out = np.exp(np.asarray(log_bessel_i(alpha, za, policy)) - za)
    return out if out.ndim else float(out)


def bessel_i(alpha, z, policy=DEFAULT_POLICY):
    """:math:`I_\\alpha(z)` for ``alpha > -1/2`` and ``z >= 0``.

    Raises :class:`RangeError` when the value overflows a double; call
    :func:`bessel_i_scaled` or :func:`log_bessel_i` instead.
    """
    log_val = np.asarray(log_bessel_i(alpha, z, policy))
    if np.any(log_val > 709.0):
        raise RangeError("I_alpha(z) overflows; use bessel_i_scaled or log_bessel_i")
    out = np.exp(log_val)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Eigenfunction systems


def _check_order(k):
    if k < 0 or int(k) != k:
        raise DomainError("eigenfunction order must be a nonnegative integer")
    if k > MAX_EIGEN_ORDER:
        raise CapabilityError(f"orders above {MAX_EIGEN_ORDER} are not supported")


def _rescale(cur, prev, logscale):
    mag = np.maximum(np.abs(cur), np.abs(prev))
    hit = mag > _BIG
    if np.any(hit):
        cur = np.where(hit, cur / _BIG, cur)
        prev = np.where(hit, prev / _BIG, prev)
        logscale = logscale + np.where(hit, _LOG_BIG, 0.0)
    return cur, prev, logscale


def hermite_functions(kmax, x):
    """All :math:`h_0,\\dots,h_{kmax}` at ``x``; shape ``(kmax+1,) + x.shape``.

    Uses the normalized recurrence
    :math:`h_{k+1} = \\sqrt{2/(k+1)}\\,x h_k - \\sqrt{k/(k+1)}\\,h_{k-1}`
    started without the Gaussian factor; the factor and the accumulated
    rescaling are applied in log form at the end so large ``|x|`` neither
    underflows early nor overflows.
    """
    _check_order(kmax)
    xa = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + xa.shape)
    logscale = np.zeros(xa.shape)
    gauss = -0.5 * xa * xa
    prev = np.zeros(xa.shape)
    cur = np.full(xa.shape, math.pi ** -0.25)
    out[0] = cur * np.exp(gauss)
    for k in range(kmax):
        nxt = math.sqrt(2.0 / (k + 1)) * xa * cur - math.sqrt(k / (k + 1.0)) * prev
        prev, cur = cur, nxt
        cur, prev, logscale = _rescale(cur, prev, logscale)
        out[k + 1] = cur * np.exp(gauss + logscale)
    return out


def hermite_fn(k, x):
    """The ``k``-th normalized Hermite function."""
    out = hermite_functions(int(k), x)[k]
    return out if out.ndim else float(out)


def laguerre_functions(alpha, kmax, x):
    """All :math:`\\varphi_0^\\alpha,\\dots,\\varphi_{kmax}^\\alpha` at ``x > 0``.

    The polynomial part is propagated in the normalized form
    :math:`\\tilde\\ell_k = (k!/\\Gamma(k+\\alpha+1))^{1/2}\\ell_k^\\alpha`, for
    which the three-term recurrence has O(1) coefficients.
    """
    if not alpha > -0.5:
        raise DomainError("laguerre functions require alpha > -1/2")
    _check_order(kmax)
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("laguerre functions are defined for x > 0")
    s = xa * xa
    out = np.empty((kmax + 1,) + xa.shape)
    logscale = np.zeros(xa.shape)
    pref = 0.5 * math.log(2.0) - 0.5 * s + (alpha + 0.5) * np.log(xa)
    prev = np.zeros(xa.shape)
    cur = np.full(xa.shape, math.exp(-0.5 * float(log_gamma(alpha + 1.0))))
    out[0] = cur * np.exp(pref)
    for k in range(kmax):
        a = (2 * k + alpha + 1.0 - s) / math.sqrt((k + 1.0) * (k + alpha + 1.0))
        b = math.sqrt(k * (k + alpha) / ((k + 1.0) * (k + alpha + 1.0)))
        nxt = a * cur - b * prev
        prev, cur = cur, nxt
        cur, prev, logscale = _rescale(cur, prev, logscale)
        out[k + 1] = cur * np.exp(pref + logscale)
    return out


def laguerre_fn(alpha, k, x):
    """The Laguerre function :math:`\\varphi_k^\\alpha(x)`."""
    out = laguerre_functions(alpha, int(k), x)[k]
    return out if out.ndim else float(out)
