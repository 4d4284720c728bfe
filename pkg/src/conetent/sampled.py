"""Sampled test functions with a declared support and interpolation policy."""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError

__all__ = ["SampledFunction", "bump", "combine", "gaussian", "stack"]


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Samples of a scalar or vector valued function on a 1-D grid.

    ``values`` has shape ``(N,)`` or ``(N, d)``.  Outside ``support`` the
    function is zero.  When ``func`` is given (the exact generator) it is
    used for evaluation and the samples only document the function; the
    interpolant is used otherwise.  ``scale`` is the natural length scale
    of the function and drives grid sizing downstream.
    """

    grid: np.ndarray
    values: np.ndarray
    support: tuple
    interp: str = "cubic"
    func: object = None
    scale: float = None
    label: str = ""
    _spline: object = field(default=None, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values)
        if grid.ndim != 1 or grid.size < 2:
            raise DomainError("grid must be a 1-D array with at least two nodes")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("grid must be strictly increasing")
        if values.shape[0] != grid.size:
            raise DomainError("values must have one entry per grid node")
        if not np.all(np.isfinite(values)):
            raise DomainError("values must be finite")
        a, b = (float(s) for s in self.support)
        if not a < b:
            raise DomainError("support must be a nonempty interval")
        outside = (grid < a) | (grid > b)
        nz = np.abs(values).reshape(grid.size, -1).max(axis=1) > 0
        if np.any(outside & nz):
            raise DomainError("nonzero samples outside the declared support")
        if self.interp not in ("linear", "cubic"):
            raise DomainError("interp must be 'linear' or 'cubic'")
        grid.setflags(write=False)
        values = np.array(values)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", (a, b))
        if self.scale is None:
            object.__setattr__(self, "scale", 0.5 * (b - a))
        if self.func is None and self.interp == "cubic":
            object.__setattr__(self, "_spline", CubicSpline(grid, values, axis=0))

    @classmethod
    def from_callable(cls, func, support, n=401, scale=None, label="", grid=None):
        """Sample ``func`` on ``n`` uniform nodes of ``support`` and keep it for evaluation."""
        a, b = support
        grid = np.linspace(a, b, n) if grid is None else np.asarray(grid, dtype=float)
        return cls(grid, func(grid), (a, b), func=func, scale=scale, label=label)

    @property
    def dim(self):
        """Number of components (1 for scalar functions)."""
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    @property
    def halfline(self):
        return self.support[0] >= 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.support
        inside = (x >= a) & (x <= b)
        if self.func is not None:
            out = np.asarray(self.func(np.clip(x, a, b)), dtype=float)
        elif self.interp == "cubic":
            out = self._spline(np.clip(x, self.grid[0], self.grid[-1]))
        else:
            if self.values.ndim == 1:
                out = np.interp(x, self.grid, self.values)
            else:
                out = np.stack([np.interp(x, self.grid, v) for v in self.values.T], axis=-1)
        mask = inside if out.ndim == x.ndim else inside[..., None]
        return np.where(mask, out, 0.0)

    def component(self, i):
        """The ``i``-th component of a vector valued function."""
        if self.values.ndim == 1:
            if i != 0:
                raise DomainError("scalar function has a single component")
            return self
        func = None if self.func is None else (lambda x, f=self.func: np.asarray(f(x))[..., i])
        return SampledFunction(self.grid, self.values[:, i], self.support, self.interp, func, self.scale, f"{self.label}[{i}]")

    def scaled(self, c):
        func = None if self.func is None else (lambda x, f=self.func: c * np.asarray(f(x)))
        return SampledFunction(self.grid, c * self.values, self.support, self.interp, func, self.scale, f"{c:g}*{self.label}")

    def dilate(self, delta):
        """``x -> f(delta * x)``."""
        if not delta > 0:
            raise DomainError("dilation factor must be positive")
        a, b = self.support
        func = lambda x, s=self: s(delta * np.asarray(x))
        return SampledFunction(self.grid / delta, self.values, (a / delta, b / delta), self.interp, func, self.scale / delta, f"{self.label}@dil{delta:g}")

    def translate(self, h):
        """``x -> f(x - h)``."""
        a, b = self.support
        func = (lambda x, s=self: s(np.asarray(x) - h))
        return SampledFunction(self.grid + h, self.values, (a + h, b + h), self.interp, func, self.scale, f"{self.label}@tr{h:g}")


def combine(f, g, a=1.0, b=1.0):
    """``a * f + b * g`` on the union of the supports."""
    lo = min(f.support[0], g.support[0])
    hi = max(f.support[1], g.support[1])
    func = lambda x: a * f(x) + b * g(x)
    return SampledFunction.from_callable(func, (lo, hi), scale=min(f.scale, g.scale), label=f"{a:g}*{f.label}+{b:g}*{g.label}")


def stack(parts, label=""):
    """Vector valued function whose components are ``parts``."""
    lo = min(p.support[0] for p in parts)
    hi = max(p.support[1] for p in parts)
    func = lambda x: np.stack([p(x) for p in parts], axis=-1)
    return SampledFunction.from_callable(func, (lo, hi), scale=min(p.scale for p in parts), label=label or "stack")


def _bump_profile(u):
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1
    safe = np.where(inside, 1 - u * u, 1.0)
    return np.where(inside, np.exp(1.0 - 1.0 / safe), 0.0)


def bump(center=0.0, radius=1.0, n=401):
    r"""Smooth bump :math:`\exp(1 - 1/(1-u^2))`, :math:`u = (x-c)/r`, height 1.

    The profile varies mostly in :math:`1/2 < |u| < 1`, so its length
    scale is taken as half the radius.
    """
    func = lambda x: _bump_profile((np.asarray(x) - center) / radius)
    return SampledFunction.from_callable(func, (center - radius, center + radius), n=n, scale=0.5 * radius, label=f"bump({center:g},{radius:g})")


def gaussian(center=0.0, width=1.0, cutoff=6.5, n=801):
    r""":math:`e^{-((x-c)/w)^2}` truncated at ``cutoff`` widths."""
    func = lambda x: np.exp(-(((np.asarray(x) - center) / width) ** 2))
    return SampledFunction.from_callable(func, (center - cutoff * width, center + cutoff * width), n=n, scale=width, label=f"gaussian({center:g},{width:g})")

