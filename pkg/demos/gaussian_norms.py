r"""Gaussian norms of finite-rank operators.

In a Hilbert range the :math:`\gamma`-norm of a matrix is its Frobenius
norm, so the Monte Carlo estimator can be checked exactly.  The standard
error should shrink like :math:`N^{-1/2}`.  Changing the range exponent
:math:`q` changes the norm but not the estimator.
"""

import numpy as np

from conetent.gammanorm import BanachDescriptor, FiniteRankOperator, gamma_norm_hilbert, gamma_norm_mc


def convergence():
    M = np.random.default_rng(7).standard_normal((50, 8))
    T = FiniteRankOperator(M)
    exact = gamma_norm_hilbert(T)
    print(f"closed form {exact:.6f}")
    for n in (1_000, 10_000, 100_000):
        est, se = gamma_norm_mc(T, BanachDescriptor(8, 2.0), samples=n, seed=1)
        print(f"  N={n:>7}: {est:.6f} +- {se:.6f}  ({abs(est - exact) / se:.2f} stderr)")
    for q in (1.0, 3.0, np.inf):
        est, se = gamma_norm_mc(T, BanachDescriptor(8, q), samples=100_000, seed=1)
        print(f"  q={q}: {est:.6f} +- {se:.6f}")


if __name__ == "__main__":
    convergence()
