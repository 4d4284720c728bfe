"""Conical square functions of fractional Poisson derivatives, numerically.

Kernels for the classical, Hermite, Bessel and Laguerre settings, fractional
time derivatives by three independent routes, cone quadrature, tent norms,
Gaussian norms for vector valued functions and an experiment runner.
"""

__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    CapabilityError,
    ConetentError,
    ConfigError,
    ContractError,
    DomainError,
    RangeError,
)
from .kernels import SettingDescriptor
from .fracderiv import (
    FractionalOrder,
    frac_dt_poisson_fourier,
    frac_dt_spectral,
    frac_dt_sw,
    frac_poisson_kernel,
    poisson_apply,
)
from .sampled import SampledFunction, bump, gaussian
from .tent import ConeParams, conical_sqfn, lp_norm, tent_norm_scalar
from .gammanorm import BanachDescriptor, FiniteRankOperator, gamma_norm_hilbert, gamma_norm_mc

__all__ = [
    "__version__",
    "AccuracyError",
    "CapabilityError",
    "ConetentError",
    "ConfigError",
    "ContractError",
    "DomainError",
    "RangeError",
    "SettingDescriptor",
    "FractionalOrder",
    "frac_dt_poisson_fourier",
    "frac_dt_spectral",
    "frac_dt_sw",
    "frac_poisson_kernel",
    "poisson_apply",
    "SampledFunction",
    "bump",
    "gaussian",
    "ConeParams",
    "conical_sqfn",
    "lp_norm",
    "tent_norm_scalar",
    "BanachDescriptor",
    "FiniteRankOperator",
    "gamma_norm_hilbert",
    "gamma_norm_mc",
]
