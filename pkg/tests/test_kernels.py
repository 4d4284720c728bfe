import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from conetent.errors import CapabilityError, DomainError
from conetent.kernels import (
    SettingDescriptor,
    critical_radius_hermite,
    dt_power_family,
    hankel_kernel,
    hankel_transform,
    heat_gauss_weierstrass,
    heat_hermite,
    heat_laguerre,
    poisson_bessel,
    poisson_bessel_array,
    poisson_classical,
    poisson_classical_dtm,
    poisson_subordinate,
    subordination_weight,
)
from conetent.quadrature import gauss_legendre
from conetent.sampled import bump
from conetent.specfun import hermite_functions, laguerre_functions


# ---------------------------------------------------------------- settings


def test_setting_descriptor_constructors():
    assert SettingDescriptor.classical(2).describe() == "classical(n=2)"
    assert SettingDescriptor.bessel(1.5).halfline
    assert SettingDescriptor.laguerre(1).alpha == 1.0
    assert not SettingDescriptor.hermite().halfline


@pytest.mark.parametrize(
    "kw",
    [
        dict(family="nope"),
        dict(family="classical", n=0),
        dict(family="classical", lam=1.0),
        dict(family="bessel"),
        dict(family="bessel", lam=0.0),
        dict(family="laguerre", alpha=-0.2),
        dict(family="laguerre", alpha=1.0, lam=1.0),
    ],
)
def test_setting_descriptor_rejects_wrong_parameters(kw):
    with pytest.raises(DomainError):
        SettingDescriptor(**kw)


# ---------------------------------------------------------------- classical


def test_poisson_classical_values():
    assert poisson_classical(1, 1.0, 0.0) == pytest.approx(1 / math.pi, rel=1e-15)
    val, _ = integrate.quad(lambda z: poisson_classical(1, 1.0, z), -np.inf, np.inf, epsabs=1e-12)
    assert abs(val - 1) <= 1e-8
    assert poisson_classical(1, 2.0, 3.0) == pytest.approx(poisson_classical(1, 1.0, 1.5) / 2, rel=1e-15)


def test_poisson_classical_mass_in_two_dimensions():
    r = np.linspace(0, 2000, 400001)
    val = np.trapezoid(2 * math.pi * r * poisson_classical(2, 1.0, np.stack([r, 0 * r], axis=-1)), r)
    assert val == pytest.approx(1.0, abs=1e-3)


def test_poisson_classical_rejects_nonpositive_time():
    with pytest.raises(DomainError):
        poisson_classical(1, 0.0, 1.0)


def test_dtm_zeroth_order_is_the_kernel():
    z = np.linspace(-3, 3, 13)
    assert np.array_equal(poisson_classical_dtm(1, 0, 0.7, z), poisson_classical(1, 0.7, z))
    zz = np.stack([z, 0.5 + 0 * z], axis=-1)
    assert np.allclose(poisson_classical_dtm(2, 0, 0.7, zz), poisson_classical(2, 0.7, zz), rtol=1e-14)


def test_dtm_first_order_matches_finite_difference():
    h = 1e-5
    fd = (poisson_classical(1, 1 + h, 1.0) - poisson_classical(1, 1 - h, 1.0)) / (2 * h)
    assert abs(poisson_classical_dtm(1, 1, 1.0, 1.0) - fd) <= 1e-7


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("m", [1, 2, 3, 5, 8])
def test_dtm_matches_independent_leibniz_expansion(n, m):
    t = np.geomspace(0.05, 20, 9)[:, None]
    r = np.array([0.0, 0.3, 2.0, 7.0])[None, :]
    z = r[..., None] * np.eye(n)[0] if n > 1 else r
    ref = math.gamma((n + 1) / 2) / math.pi ** ((n + 1) / 2) * dt_power_family(m, t, r * r, (n + 1) / 2)
    assert np.allclose(poisson_classical_dtm(n, m, t, z), ref, rtol=1e-10, atol=0)


def _sup_ratio(m, nodes):
    t = np.geomspace(1e-2, 1e2, nodes)[:, None]
    z = np.geomspace(1e-2, 1e2, nodes)[None, :]
    return np.max(np.abs(poisson_classical_dtm(1, m, t, z)) * (t + z) ** (m + 1))


def test_dtm_envelope_is_bounded_and_stable():
    coarse, fine = _sup_ratio(2, 41), _sup_ratio(2, 81)
    assert np.isfinite(coarse) and coarse < 10
    assert abs(fine - coarse) / fine < 0.05


def test_dtm_order_limits():
    with pytest.raises(CapabilityError):
        poisson_classical_dtm(1, 10, 1.0, 0.0)
    with pytest.raises(DomainError):
        poisson_classical_dtm(1, -1, 1.0, 0.0)


# ---------------------------------------------------------------- heat kernels


def test_heat_hermite_symmetry_and_small_time_limit():
    x = np.linspace(-2, 2, 9)[:, None]
    y = np.linspace(-1.5, 2.5, 7)[None, :]
    assert np.array_equal(heat_hermite(1, 0.3, x, y), heat_hermite(1, 0.3, y, x))
    t, a, b = 1e-4, 0.3, 0.5
    free = (4 * math.pi * t) ** -0.5 * math.exp(-((a - b) ** 2) / (4 * t))
    assert abs(heat_hermite(1, t, a, b) / free - 1) <= 1e-3


def test_heat_hermite_matches_mehler_display():
    t, x, y = 0.4, 0.7, -1.1
    e2, e4 = math.exp(-2 * t), math.exp(-4 * t)
    ref = (
        math.pi ** -0.5
        * (e2 / (1 - e4)) ** 0.5
        * math.exp(-0.25 * ((x - y) ** 2 * (1 + e2) / (1 - e2) + (x + y) ** 2 * (1 - e2) / (1 + e2)))
    )
    assert heat_hermite(1, t, x, y) == pytest.approx(ref, rel=1e-13)
    assert heat_hermite(1, t, x, y, log=True) == pytest.approx(math.log(ref), rel=1e-13)


def test_heat_hermite_feynman_kac_envelope_stable():
    def sup(nodes):
        t = np.geomspace(1e-3, 1e2, nodes)[:, None, None]
        x = np.linspace(-5, 5, nodes)[None, :, None]
        y = np.linspace(-5, 5, nodes)[None, None, :]
        r = heat_hermite(1, t, x, y, log=True) + 0.5 * np.log(t) + (x - y) ** 2 / (4 * t)
        return float(np.exp(r.max()))

    a, b = sup(25), sup(49)
    assert np.isfinite(a) and abs(b - a) / b < 0.05


def test_heat_laguerre_symmetry_and_log_mode():
    x = np.linspace(0.1, 3, 7)[:, None]
    y = np.linspace(0.2, 2.5, 5)[None, :]
    k = heat_laguerre(1.0, 0.4, x, y)
    assert np.array_equal(k, heat_laguerre(1.0, 0.4, y, x))
    assert np.allclose(np.log(k), heat_laguerre(1.0, 0.4, x, y, log=True), rtol=1e-13)


def test_heat_laguerre_no_overflow_at_large_arguments():
    v = heat_laguerre(1.0, 1e-3, 40.0, 40.01)
    assert np.isfinite(v) and v > 0


@pytest.mark.parametrize("k", [0, 1, 2])
def test_heat_laguerre_eigenrelation(k):
    alpha, t, x = 1.0, 0.3, 0.8
    lhs, _ = integrate.quad(
        lambda y: heat_laguerre(alpha, t, x, y) * laguerre_functions(alpha, k, y)[k], 1e-12, 15, epsabs=1e-13, limit=200, points=[x]
    )
    rhs = math.exp(-2 * t * (2 * k + alpha + 1)) * laguerre_functions(alpha, k, x)[k]
    assert abs(lhs - rhs) <= 1e-6 * max(1.0, abs(rhs))


def test_heat_laguerre_envelope_stable():
    c = 0.125

    def sup(nodes):
        t = np.geomspace(1e-3, 1e2, nodes)[:, None, None]
        x = np.linspace(0.05, 5, nodes)[None, :, None]
        y = np.linspace(0.05, 5, nodes)[None, None, :]
        r = heat_laguerre(1.0, t, x, y, log=True) + 0.5 * np.log(t) + c * (x - y) ** 2 / t
        return float(np.exp(r.max()))

    a, b = sup(25), sup(49)
    assert np.isfinite(a) and abs(b - a) / b < 0.05


def test_heat_laguerre_domain():
    with pytest.raises(DomainError):
        heat_laguerre(1.0, 0.5, 0.0, 1.0)
    with pytest.raises(DomainError):
        heat_laguerre(1.0, -0.5, 1.0, 1.0)


def _gl_line(lo, hi, panels=400):
    e = np.linspace(lo, hi, panels + 1)
    z, w = gauss_legendre(16, e[:-1], e[1:])
    return z.ravel(), w.ravel()


@pytest.mark.parametrize("x,y", [(0.0, 0.5), (-1.2, 0.3), (2.0, 1.5)])
def test_chapman_kolmogorov_hermite(x, y):
    s, t = 0.2, 0.5
    z, w = _gl_line(-15, 15)
    lhs = np.sum(w * heat_hermite(1, s, x, z) * heat_hermite(1, t, z, y))
    assert lhs == pytest.approx(heat_hermite(1, s + t, x, y), rel=1e-5)


@pytest.mark.parametrize("x,y", [(0.5, 0.8), (1.2, 0.3), (2.0, 2.5)])
def test_chapman_kolmogorov_laguerre(x, y):
    s, t = 0.2, 0.5
    z, w = _gl_line(1e-12, 15)
    lhs = np.sum(w * heat_laguerre(1.0, s, x, z) * heat_laguerre(1.0, t, z, y))
    assert lhs == pytest.approx(heat_laguerre(1.0, s + t, x, y), rel=1e-5)


def test_kernels_are_nonnegative_on_random_grids():
    rng = np.random.default_rng(7)
    n = 10_000
    t = np.exp(rng.uniform(math.log(1e-3), math.log(1e2), n))
    x = rng.uniform(-6, 6, n)
    y = rng.uniform(-6, 6, n)
    assert np.all(poisson_classical(1, t, x - y) >= 0)
    assert np.all(heat_hermite(1, t, x, y) >= 0)
    xp, yp = np.abs(x) + 1e-3, np.abs(y) + 1e-3
    assert np.all(heat_laguerre(1.0, t, xp, yp) >= 0)
    assert np.all(poisson_bessel_array(1.5, t, xp, yp) >= 0)


# ---------------------------------------------------------------- Bessel Poisson


@pytest.mark.parametrize("lam", [0.1, 1.0, 2.0])
def test_poisson_bessel_symmetry_and_batched_agreement(lam):
    pts = [(0.3, 0.7, 1.1), (1.0, 2.0, 0.5), (0.05, 1.0, 1.02), (5.0, 0.2, 3.0)]
    for t, x, y in pts:
        a = poisson_bessel(lam, t, x, y)
        assert a == pytest.approx(poisson_bessel(lam, t, y, x), rel=1e-12)
        assert a > 0
        assert poisson_bessel_array(lam, t, x, y) == pytest.approx(a, rel=1e-8)


def test_poisson_bessel_domain():
    with pytest.raises(DomainError):
        poisson_bessel(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        poisson_bessel(1.0, 1.0, 0.0, 1.0)


def test_poisson_bessel_symbol_at_order_zero():
    from conetent.experiments import hankel_symbol_lhs

    lam, t = 1.0, 0.5
    f = bump(1.5, 0.8)
    xs = np.array([0.7, 1.9, 3.1])
    lhs = hankel_symbol_lhs(lam, 0.0, f, t, xs)
    rhs = np.exp(-t * xs) * hankel_transform(lam, f, xs)
    assert np.max(np.abs(lhs - rhs) / np.abs(rhs)) <= 1e-4


# ---------------------------------------------------------------- subordination


def test_subordination_weight_normalized():
    val, _ = integrate.quad(lambda u: subordination_weight(0.7, u), 0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(val - 1) <= 1e-10


@pytest.mark.parametrize("t,z", [(1.0, 0.5), (0.3, 0.0), (2.0, 3.0), (0.05, 0.4), (7.0, 1.0)])
def test_subordinated_gauss_weierstrass_is_poisson(t, z):
    val = poisson_subordinate(lambda u, x, y: heat_gauss_weierstrass(1, u, x - y), t, z, 0.0)
    assert val == pytest.approx(poisson_classical(1, t, z), rel=1e-8)


def test_subordinated_hermite_kernel_symmetric_positive():
    pts = np.linspace(-2, 2, 5)
    vals = np.array([[poisson_subordinate(lambda u, a, b: heat_hermite(1, u, a, b), 0.6, x, y) for y in pts] for x in pts])
    assert np.all(vals > 0)
    assert np.allclose(vals, vals.T, rtol=1e-9)


def _hermite_spectral_poisson(t, xs, ys, K):
    h = hermite_functions(K - 1, np.concatenate([xs, ys]))
    lam = 2 * np.arange(K) + 1.0
    n = xs.size
    return np.sum(np.exp(-t * np.sqrt(lam))[:, None] * h[:, :n] * h[:, n:], axis=0)


# the K = 64 expansion has a tail of size exp(-t sqrt(129)); at t = 1 that is
# about 1e-5, so K = 64 is compared from t = 1.5 on and t = 1 uses K = 256
@pytest.mark.parametrize("t,K", [(1.5, 64), (2.0, 64), (1.0, 256)])
def test_subordinated_hermite_matches_spectral_expansion(t, K):
    xs = np.array([-1.0, 0.0, 0.4, 1.3])
    ys = np.array([0.2, -0.5, 0.4, 2.0])
    spec = _hermite_spectral_poisson(t, xs, ys, K)
    sub = np.array([poisson_subordinate(lambda u, a, b: heat_hermite(1, u, a, b), t, x, y) for x, y in zip(xs, ys)])
    assert np.max(np.abs(sub - spec) / np.abs(sub)) <= 1e-5


# ---------------------------------------------------------------- Hankel


def _inverse(lam, f, xs, top):
    xi, w = _gl_line(0.0, top, int(top * 1.5))
    return hankel_kernel(lam, xs[:, None] * xi) @ (w * hankel_transform(lam, f, xi))


@pytest.mark.parametrize("lam,top", [(1.0, 150.0), (2.0, 100.0)])
def test_hankel_transform_is_self_inverse(lam, top):
    f = bump(1.5, 0.8)
    xs = np.array([0.9, 1.2, 1.5, 1.8, 2.1])
    assert np.max(np.abs(_inverse(lam, f, xs, top) - f(xs))) <= 1e-4


def test_hankel_transform_small_order_below_one_half():
    f = bump(1.5, 0.8)
    xs = np.array([1.2, 1.8])
    assert np.max(np.abs(_inverse(0.3, f, xs, 100.0) - f(xs))) <= 1e-4


def test_hankel_transform_order_one_is_sine_transform():
    f = bump(1.0, 0.7)
    xi = np.array([0.3, 1.0, 4.0, 11.0])
    y, w = _gl_line(0.3, 1.7, 200)
    ref = math.sqrt(2 / math.pi) * (np.sin(xi[:, None] * y) @ (w * f(y)))
    assert np.max(np.abs(hankel_transform(1.0, f, xi) - ref)) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_hankel_transform_is_linear(a, b):
    f, g = bump(1.0, 0.7), bump(2.0, 0.5)
    from conetent.sampled import combine

    xi = np.array([0.5, 2.0, 6.0])
    lhs = hankel_transform(1.5, combine(f, g, a, b), xi)
    rhs = a * hankel_transform(1.5, f, xi) + b * hankel_transform(1.5, g, xi)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-9 * (1 + abs(a) + abs(b)))


def test_hankel_transform_domain():
    with pytest.raises(DomainError):
        hankel_transform(0.0, bump(1.0, 0.5), 1.0)
    with pytest.raises(DomainError):
        hankel_transform(1.0, bump(1.0, 0.5), 0.0)


# ---------------------------------------------------------------- critical radius


def test_critical_radius_values_and_monotonicity():
    assert critical_radius_hermite(0.0) == 0.5
    assert critical_radius_hermite(3.0) == 0.25
    assert critical_radius_hermite(-3.0) == 0.25
    r = np.linspace(0, 20, 401)
    assert np.all(np.diff(critical_radius_hermite(r)) <= 0)
    pts = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert np.allclose(critical_radius_hermite(pts, dim=2), [0.5, 1 / 6])
    # broadcast coordinate arrays stay elementwise in one dimension
    grid = np.linspace(-3, 3, 7)[None, None, :]
    assert np.array_equal(critical_radius_hermite(grid), critical_radius_hermite(grid.ravel())[None, None, :])
    with pytest.raises(DomainError):
        critical_radius_hermite(pts, dim=3)
