r"""Gaussian (:math:`\gamma`-radonifying) norms of finite-rank operators.

For :math:`T: H \to \mathbb{B}` of finite rank and an orthonormal basis
:math:`(h_j)` of :math:`H`,

.. math:: \|T\|_\gamma = \Big(\mathbb{E}\,\big\|\sum_j \gamma_j T h_j\big\|_{\mathbb B}^2\Big)^{1/2}.

With :math:`T` stored as the matrix whose rows are :math:`T h_j` this is
:math:`(\mathbb{E}\|G^\top M\|^2)^{1/2}` for a standard Gaussian vector
:math:`G`; for a Euclidean range it is the Frobenius norm.  The Hilbert
space :math:`H` is the weighted node space of a cone grid, so the
orthonormal basis is the indicator basis scaled by square-root weights.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os

import numpy as np

from .errors import CapabilityError, ContractError, DomainError
from .tent import ConeField, lp_norm_grid

__all__ = [
    "BanachDescriptor",
    "FiniteRankOperator",
    "gamma_norm_hilbert",
    "gamma_norm_mc",
    "j_functional",
    "tent_norm_gamma",
    "thread_count",
]


@dataclass(frozen=True)
class BanachDescriptor:
    """:math:`\\mathbb{R}^d` with the :math:`\\ell^q` norm (``q = inf`` for the max norm)."""

    d: int
    q: float = 2.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError("dimension d must be a positive integer")
        if not (self.q >= 1):
            raise DomainError("norm exponent q must be at least 1")

    @property
    def hilbert(self):
        return self.q == 2

    def norm(self, v, axis=-1):
        v = np.abs(v)
        if self.q == np.inf:
            return np.max(v, axis=axis)
        return np.sum(v ** self.q, axis=axis) ** (1.0 / self.q)


@dataclass(frozen=True, eq=False)
class FiniteRankOperator:
    """``K x d`` matrix of an operator on the weighted node space.

    Row ``j`` is the image of the ``j``-th orthonormal basis vector, so the
    quadrature weights ``h_weights`` are already folded into the rows.
    """

    matrix: np.ndarray
    h_weights: np.ndarray = None

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.ndim == 1:
            M = M[:, None]
        if M.ndim != 2 or M.shape[0] < 1:
            raise DomainError("operator matrix must be K x d with K >= 1")
        if not np.all(np.isfinite(M)):
            raise DomainError("operator matrix must be finite")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        if self.h_weights is not None:
            w = np.array(self.h_weights, dtype=float)
            if w.shape != (M.shape[0],):
                raise DomainError("one weight per row required")
            w.setflags(write=False)
            object.__setattr__(self, "h_weights", w)

    @property
    def shape(self):
        return self.matrix.shape

    def padded(self, extra):
        """Same operator with ``extra`` zero coordinates appended to the range."""
        M = np.concatenate([self.matrix, np.zeros((self.shape[0], extra))], axis=1)
        return FiniteRankOperator(M, self.h_weights)


def gamma_norm_hilbert(T, banach=None):
    """Closed form for a Euclidean range: the Frobenius norm."""
    if banach is not None and not banach.hilbert:
        raise ContractError("closed form needs q = 2; use gamma_norm_mc for other norms")
    return float(np.sqrt(np.sum(T.matrix ** 2)))


def thread_count():
    """Worker cap from ``CONETENT_THREADS`` (hardware default when unset)."""
    raw = os.environ.get("CONETENT_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise DomainError("CONETENT_THREADS must be a positive integer") from exc
    if n < 1:
        raise DomainError("CONETENT_THREADS must be a positive integer")
    return n


def gamma_norm_mc(T, banach, samples=100_000, seed=0, block=8192):
    r"""Monte Carlo :math:`\gamma`-norm with its standard error.

    Samples are drawn in blocks, each from its own substream of
    ``SeedSequence(seed)``; squared norms are reduced in block order, so
    the result does not depend on the thread count.  The standard error of
    :math:`\sqrt{\bar X}` is :math:`\mathrm{se}(\bar X)/(2\sqrt{\bar X})`.
    """
    if samples < 1000:
        raise ContractError("at least 1000 samples are required")
    M = T.matrix
    if M.shape[1] != banach.d:
        raise DomainError("operator range dimension does not match the Banach descriptor")
    sizes = [block] * (samples // block) + ([samples % block] if samples % block else [])
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(i):
        rng = np.random.Generator(np.random.PCG64(streams[i]))
        G = rng.standard_normal((sizes[i], M.shape[0]))
        return banach.norm(G @ M) ** 2

    workers = min(thread_count(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    sq = np.concatenate(parts)
    mean = float(np.mean(sq))
    if mean == 0.0:
        return 0.0, 0.0
    se_mean = float(np.std(sq, ddof=1)) / math.sqrt(sq.size)
    est = math.sqrt(mean)
    return est, se_mean / (2.0 * est)


def j_functional(field, apex=None):
    r"""Operator :math:`h \mapsto \int \chi_{B(x,t)}(y) g(y,t) h(y,t)\,d\mu` on the node basis.

    Row ``j`` is :math:`\sqrt{w_j}\,g(y_j,t_j)` when :math:`|x-y_j|<t_j`
    and zero otherwise.  Complex scalar fields map to :math:`\mathbb{R}^2`
    (real and imaginary parts), which is isometric to :math:`\mathbb{C}`.
    Complex vector fields must share one phase, which is removed.
    """
    if not isinstance(field, ConeField):
        raise DomainError("j_functional expects a ConeField")
    grid = field.grid
    x = grid.apex if apex is None else np.atleast_1d(np.asarray(apex, dtype=float))
    y = grid.y if grid.dim > 1 else grid.y[:, None]
    inside = np.linalg.norm(y - x, axis=1) < grid.t
    v = field.values
    if v.ndim == 1:
        v = np.stack([v.real, v.imag], axis=1) if np.iscomplexobj(v) else v[:, None]
    elif np.iscomplexobj(v):
        v = _strip_common_phase(v)
    rows = np.sqrt(grid.weights)[:, None] * v * inside[:, None]
    return FiniteRankOperator(rows, grid.weights)


def _strip_common_phase(v):
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if v[k] == 0:
        return np.zeros(v.shape)
    rot = v * (abs(v[k]) / v[k])
    if np.max(np.abs(rot.imag)) > 1e-12 * abs(v[k]):
        raise CapabilityError("complex vector fields must share a common phase")
    return rot.real


def tent_norm_gamma(field_family, banach, p, xgrid, samples=10_000, seed=0, tails=True):
    """:math:`L^p` norm over apexes of the :math:`\\gamma`-norm of the J-functional.

    ``field_family`` is a callable ``x -> ConeField`` or a sequence with one
    field per node of ``xgrid``.

    Returns ``(value, stderr)``; the standard error is zero on the closed
    form path and otherwise propagated from the per-apex errors (each apex
    uses its own seed substream).
    """
    if not p >= 1:
        raise DomainError("p must be at least 1")
    xs = xgrid.nodes
    vals = np.empty(xs.size)
    errs = np.zeros(xs.size)
    seeds = np.random.SeedSequence(seed).spawn(xs.size)
    for i, x in enumerate(xs):
        fl = field_family(x) if callable(field_family) else field_family[i]
        T = j_functional(fl, x)
        if banach.hilbert:
            vals[i] = gamma_norm_hilbert(T, banach)
        else:
            sub = int(seeds[i].generate_state(1, np.uint64)[0])
            vals[i], errs[i] = gamma_norm_mc(T, banach, samples, sub)
    norm = lp_norm_grid(vals, xgrid, p, tails)
    if norm == 0:
        return 0.0, 0.0
    grad = xgrid.weights * vals ** (p - 1.0) / norm ** (p - 1.0)
    return norm, float(np.sqrt(np.sum((grad * errs) ** 2)))
