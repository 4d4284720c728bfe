r"""Independent routes to the same fractional time derivative.

The kernel :math:`t^\beta\partial_t^\beta P_t(x,y)` can be computed from
the time-integral definition, from closed forms, from eigen expansions and
from subordination.  The numbers below should agree to many digits; a
disagreement would point at one of the routes.
"""

import numpy as np

from conetent.experiments import classical_sw_apply
from conetent.fracderiv import frac_dt_poisson_fourier, frac_poisson_kernel, poisson_apply
from conetent.kernels import SettingDescriptor
from conetent.sampled import gaussian


def classical_kernel():
    setting = SettingDescriptor.classical(1)
    print("classical kernel, beta = 0.5, x - y = 0.4")
    for route in ("sw", "closed"):
        v = frac_poisson_kernel(setting, 0.5, 1.0, 0.4, 0.0, route=route)
        print(f"  {route:>8}: {complex(v):.15f}")


def applied_to_gaussian():
    f = gaussian(0.0, 1.0)
    print("applied to a unit Gaussian at y = 0.2, t = 0.5")
    for beta in (0.5, 1.7):
        sw = classical_sw_apply(beta, f, 0.2, 0.5)
        ft = complex(frac_dt_poisson_fourier(f, beta, 0.5, 0.2))
        print(f"  beta={beta}: time integral {sw:.12f}  fourier {ft:.12f}  rel dev {abs(sw - ft) / abs(ft):.1e}")


def hermite_routes():
    setting = SettingDescriptor("hermite", n=1)
    f = gaussian(0.3, 1.0)
    print("hermite semigroup on a Gaussian, beta = 0.5, t = 2, y = -0.4")
    for route in ("kernel", "spectral"):
        v = poisson_apply(setting, 0.5, f, np.array([-0.4]), np.array([2.0]), route=route)
        print(f"  {route:>8}: {complex(v[0]):.12f}")


if __name__ == "__main__":
    np.set_printoptions(precision=12)
    classical_kernel()
    applied_to_gaussian()
    hermite_routes()
