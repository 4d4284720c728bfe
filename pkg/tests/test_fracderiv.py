import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from conetent.errors import AccuracyError, CapabilityError, DomainError
from conetent.experiments import classical_sw_apply
from conetent.fracderiv import (
    FractionalOrder,
    SpectralProfile,
    finite_difference_derivatives,
    frac_dt_poisson_fourier,
    frac_dt_spectral,
    frac_dt_sw,
    frac_poisson_kernel,
    hermite_eigenvalues,
    hermite_profile,
    laguerre_eigenvalues,
    laguerre_profile,
    poisson_apply,
)
from conetent.kernels import (
    SettingDescriptor,
    critical_radius_hermite,
    heat_laguerre,
    poisson_classical,
    poisson_classical_dtm,
    poisson_subordinate,
)
from conetent.quadrature import gauss_legendre
from conetent.sampled import SampledFunction, bump, gaussian, stack
from conetent.specfun import hermite_functions, laguerre_functions

CLASSICAL = SettingDescriptor.classical(1)
HERMITE = SettingDescriptor.hermite(1)
LAGUERRE = SettingDescriptor.laguerre(1.0)
BESSEL = SettingDescriptor.bessel(1.5)


def _phase(beta):
    return complex(math.cos(math.pi * beta), math.sin(math.pi * beta))


def _laguerre_modes(alpha, coefs):
    c = np.asarray(coefs, dtype=float)
    func = lambda x: np.tensordot(c, laguerre_functions(alpha, c.size - 1, np.maximum(x, 1e-300)), axes=1)
    return SampledFunction.from_callable(func, (0.0, 9.0), scale=0.4)


# ---------------------------------------------------------------- order


def test_fractional_order_fields():
    o = FractionalOrder(1.3)
    assert o.m == 2
    assert abs(abs(o.phase) - 1) < 1e-15
    assert FractionalOrder(2.0).m == 3
    assert o.prefactor == pytest.approx((-1) ** 2 * _phase(1.3) / math.gamma(0.7), rel=1e-14)


@pytest.mark.parametrize("bad", [0.0, -0.5, float("inf"), float("nan")])
def test_fractional_order_rejects_nonpositive(bad):
    with pytest.raises(DomainError):
        FractionalOrder(bad)


def test_fractional_order_cap():
    with pytest.raises(CapabilityError):
        FractionalOrder(9.0)


@given(st.floats(0.01, 8.9))
def test_fractional_order_bracket(beta):
    o = FractionalOrder(beta)
    assert o.m - 1 <= beta < o.m


# ---------------------------------------------------------------- direct route


def test_sw_exponential_example():
    a, b, t = 2.0, 0.5, 1.0
    v = frac_dt_sw(lambda tau, m: (-a) ** m * np.exp(-a * tau), b, t, decay=("exponential", a))
    assert v == pytest.approx(1j * math.sqrt(2) * math.exp(-2), rel=1e-12)


@settings(max_examples=40)
@given(st.floats(0.2, 4.0), st.floats(0.05, 5.5), st.floats(0.1, 3.0))
def test_sw_exponential_eigenfunction(a, beta, t):
    v = frac_dt_sw(lambda tau, m: (-a) ** m * np.exp(-a * tau), beta, t, decay=("exponential", a))
    ref = _phase(beta) * a ** beta * math.exp(-a * t)
    assert abs(v - ref) <= 1e-8 * abs(ref)


def test_sw_first_order_is_ordinary_derivative():
    F = lambda tau, m: poisson_classical_dtm(1, m, tau, 0.5)
    assert frac_dt_sw(F, 1.0, 1.0) == pytest.approx(poisson_classical_dtm(1, 1, 1.0, 0.5), rel=1e-6)


@pytest.mark.parametrize("beta", [1.0, 2.0])
def test_sw_integer_orders_reproduce_derivatives(beta):
    for t, z in [(0.3, 0.0), (1.0, 0.5), (2.0, 1.5), (0.7, -2.0), (5.0, 3.0)]:
        F = lambda tau, m: poisson_classical_dtm(1, m, tau, z)
        ref = poisson_classical_dtm(1, int(beta), t, z)
        assert frac_dt_sw(F, beta, t) == pytest.approx(ref, rel=1e-6)


def test_sw_classical_section_against_frequency_integral():
    beta, t, z = 0.5, 1.0, 0.7
    v = frac_dt_sw(lambda tau, m: poisson_classical_dtm(1, m, tau, z), beta, t)
    re, _ = integrate.quad(lambda xi: math.cos(z * xi) * xi ** beta * math.exp(-t * xi) / math.pi, 0, np.inf, epsabs=1e-14, limit=200)
    assert abs(v - _phase(beta) * re) <= 1e-5 * abs(re)


def test_sw_missing_derivative_is_a_capability_error():
    with pytest.raises(CapabilityError):
        frac_dt_sw(lambda tau, m: None, 0.5, 1.0)

    def no_deriv(tau, m):
        raise NotImplementedError

    with pytest.raises(CapabilityError):
        frac_dt_sw(no_deriv, 0.5, 1.0)


def test_sw_with_finite_difference_derivatives():
    F = finite_difference_derivatives(lambda tau: np.exp(-tau), h=0.05, order=6)
    v = frac_dt_sw(F, 0.5, 1.0, decay=("exponential", 1.0))
    assert v == pytest.approx(1j * math.exp(-1.0), rel=1e-6)


# ---------------------------------------------------------------- Fourier route


def test_fourier_route_small_order_is_the_semigroup():
    f = gaussian(0.0, 1.0)
    ys = np.array([-1.0, 0.0, 0.5, 2.0])
    for t in (0.3, 1.0):
        a = frac_dt_poisson_fourier(f, 1e-8, t, ys)
        p = poisson_apply(CLASSICAL, 0.0, f, ys, np.full(4, t))
        assert np.max(np.abs(a - p)) <= 1e-5


def test_g_function_normalization():
    z, beta = 3.0, 0.75
    val, _ = integrate.quad(lambda t: (t * z) ** (2 * beta) * math.exp(-2 * t * z) / t, 0, np.inf, epsabs=1e-14, epsrel=1e-13)
    assert abs(val - math.gamma(2 * beta) / 2 ** (2 * beta)) <= 1e-10


PANEL = [(0.0, 0.5), (0.7, 1.0), (-1.3, 0.3), (2.0, 2.0), (0.2, 0.05)]


@pytest.mark.parametrize("beta", [0.5, 1.0, 1.7])
def test_oracle_triangle_sw_fourier_kernel(beta):
    f = gaussian(0.0, 1.0)
    worst = 0.0
    for y, t in PANEL:
        ref = complex(frac_dt_poisson_fourier(f, beta, t, y))
        sw = classical_sw_apply(beta, f, y, t)
        ker = complex(poisson_apply(CLASSICAL, beta, f, np.array([y]), np.array([t]))[0]) / t ** beta
        worst = max(worst, abs(sw - ref) / abs(ref), abs(ker - ref) / abs(ref))
    assert worst <= 1e-5


def test_fourier_route_domain():
    with pytest.raises(DomainError):
        frac_dt_poisson_fourier(gaussian(), -0.1, 1.0, 0.0)
    with pytest.raises(DomainError):
        frac_dt_poisson_fourier(gaussian(), 0.5, 0.0, 0.0)


# ---------------------------------------------------------------- spectral route


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.3])
def test_spectral_single_laguerre_mode(beta):
    prof = SpectralProfile(np.array([1.0, 0.0, 0.0]), laguerre_eigenvalues(1.0, 3), ("laguerre", 1.0))
    lam0 = 2 * (1.0 + 1)
    ref = _phase(beta) * lam0 ** (beta / 2) * math.exp(-0.5 * math.sqrt(lam0)) * laguerre_functions(1.0, 0, 0.9)[0]
    assert frac_dt_spectral(prof, beta, 0.5, 0.9) == pytest.approx(ref, rel=1e-14)


def test_spectral_hermite_ground_state():
    prof = SpectralProfile(np.array([1.0]), hermite_eigenvalues(1), ("hermite",))
    ref = _phase(0.5) * math.exp(-0.7) * hermite_functions(0, 0.3)[0]
    assert frac_dt_spectral(prof, 0.5, 0.7, 0.3) == pytest.approx(ref, rel=1e-14)


def test_spectral_order_zero_matches_subordination():
    # P_t g at (t, x) = (0.5, 0.9): expansion versus the subordinated heat kernel integrated against g
    c = np.array([0.7, -0.3, 0.2])
    prof = SpectralProfile(c, laguerre_eigenvalues(1.0, 3), ("laguerre", 1.0))
    spec = frac_dt_spectral(prof, 0.0, 0.5, 0.9, check=False)
    g = _laguerre_modes(1.0, c)
    e = np.linspace(0.0, 9.0, 37)
    y, w = gauss_legendre(10, e[:-1], e[1:])
    y, w = y.ravel(), w.ravel()
    ker = np.array([poisson_subordinate(lambda u, a, b: heat_laguerre(1.0, u, a, b), 0.5, 0.9, v, tol=1e-12) for v in y])
    assert abs(np.sum(w * ker * g(y)) - spec) <= 1e-5


def test_spectral_truncation_check_raises():
    c = 1.0 / (1.0 + np.arange(8))
    prof = SpectralProfile(c, hermite_eigenvalues(8), ("hermite",))
    with pytest.raises(AccuracyError):
        frac_dt_spectral(prof, 0.5, 0.01, 0.0)


def test_spectral_profile_invariants():
    with pytest.raises(DomainError):
        SpectralProfile(np.array([]), np.array([]), ("hermite",))
    with pytest.raises(DomainError):
        SpectralProfile(np.array([1.0, 2.0]), np.array([2.0, 1.0]), ("hermite",))
    with pytest.raises(DomainError):
        SpectralProfile(np.array([np.nan]), np.array([1.0]), ("hermite",))
    with pytest.raises(DomainError):
        SpectralProfile(np.array([1.0]), np.array([1.0]), ("jacobi",))


def test_laguerre_eigenvalue_conventions():
    assert np.array_equal(laguerre_eigenvalues(1.0, 3), [4.0, 8.0, 12.0])
    assert np.array_equal(laguerre_eigenvalues(1.0, 3, "bracket"), [2.0, 4.0, 6.0])
    with pytest.raises(DomainError):
        laguerre_eigenvalues(1.0, 3, "other")


def test_profiles_recover_mode_coefficients():
    prof = hermite_profile(gaussian(0.0, 1.0), 8)
    # int pi^{-1/4} e^{-x^2/2} e^{-x^2} dx = pi^{1/4} sqrt(2/3)
    assert prof.coefficients[0] == pytest.approx(math.pi ** 0.25 * math.sqrt(2.0 / 3.0), rel=1e-10)
    assert np.all(np.abs(prof.coefficients[1::2]) < 1e-14)
    lp = laguerre_profile(_laguerre_modes(1.0, [0.0, 1.0, 0.5]), 1.0, 6)
    assert np.allclose(lp.coefficients, [0.0, 1.0, 0.5, 0.0, 0.0, 0.0], atol=1e-10)


# ---------------------------------------------------------------- kernels


def test_integer_orders_by_quadrature_match_analytic_kernels():
    t = np.array([0.3, 1.0, 2.5])
    z = np.array([0.2, -0.5, 3.0])
    for beta in (1.0, 2.0):
        sw = frac_poisson_kernel(CLASSICAL, beta, t, z, 0.0, route="sw")
        ref = t ** beta * poisson_classical_dtm(1, int(beta), t, z)
        assert np.max(np.abs(sw - ref) / np.abs(ref)) <= 1e-6


@pytest.mark.parametrize("beta", [0.5, 1.3, 2.6])
def test_classical_closed_form_matches_sw_route(beta):
    t = np.geomspace(0.05, 20, 7)[:, None]
    z = np.linspace(-4, 4, 9)[None, :]
    a = frac_poisson_kernel(CLASSICAL, beta, t, z, 0.0, route="closed")
    b = frac_poisson_kernel(CLASSICAL, beta, t, z, 0.0, route="sw")
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(a))


def test_classical_two_dimensional_sw_route_matches_radial_profile():
    # n = 2 has no one-line closed form; compare with the SW route on a single radial section
    t, r, beta = 0.8, 1.1, 0.5
    v = frac_poisson_kernel(SettingDescriptor.classical(2), beta, t, np.array([r, 0.0]), np.zeros(2))
    F = lambda tau, m: poisson_classical_dtm(2, m, tau, np.array([r, 0.0]))
    ref = t ** beta * frac_dt_sw(F, beta, t)
    assert v == pytest.approx(ref, rel=1e-8)


def _drift(fn):
    a, b = fn(21), fn(41)
    return a, abs(b - a) / b


def test_classical_kernel_envelope():
    beta = 0.5

    def sup(nodes):
        t = np.geomspace(1e-2, 1e2, nodes)[:, None]
        z = np.concatenate([[0.0], np.geomspace(1e-2, 1e2, nodes)])[None, :]
        k = frac_poisson_kernel(CLASSICAL, beta, t, z, 0.0)
        return float(np.max(np.abs(k) * (t + z) ** (1 + beta) / t ** beta))

    val, drift = _drift(sup)
    assert np.isfinite(val) and drift < 0.05


def test_bessel_kernel_envelope():
    beta = 0.5

    def sup(nodes):
        t = np.geomspace(1e-2, 1e1, nodes)[:, None, None]
        x = np.linspace(0.1, 4, nodes)[None, :, None]
        y = np.linspace(0.1, 4, nodes)[None, None, :]
        k = frac_poisson_kernel(BESSEL, beta, t, x, y)
        return float(np.max(np.abs(k) * (t + np.abs(x - y)) ** (1 + beta) / t ** beta))

    val, drift = _drift(sup)
    assert np.isfinite(val) and drift < 0.05


def test_hermite_kernel_envelope():
    beta = 0.5

    def sup(nodes):
        t = np.geomspace(1e-2, 1e1, nodes)[:, None, None]
        z = np.linspace(-3, 3, nodes)[None, :, None]
        y = np.linspace(-3, 3, nodes)[None, None, :]
        k = frac_poisson_kernel(HERMITE, beta, t, z, y)
        return float(np.max(np.abs(k) * (t + np.abs(y - z)) ** (beta + 2) / (t ** beta * critical_radius_hermite(y))))

    val, drift = _drift(sup)
    assert np.isfinite(val) and drift < 0.05


def test_hermite_kernel_needs_one_dimension():
    with pytest.raises(CapabilityError):
        frac_poisson_kernel(SettingDescriptor.hermite(2), 0.5, 1.0, np.zeros(2), np.zeros(2))


def test_kernel_order_zero_is_the_poisson_kernel():
    t = np.array([0.4, 1.7])
    z = np.array([0.3, -2.0])
    assert np.allclose(frac_poisson_kernel(CLASSICAL, 0.0, t, z, 0.0), poisson_classical(1, t, z), rtol=1e-14)


# ---------------------------------------------------------------- applying to functions


@pytest.mark.parametrize(
    "setting,f,routes",
    [
        (CLASSICAL, gaussian(0.3, 0.8), ["kernel"]),
        (HERMITE, gaussian(0.3, 0.8), ["spectral", "kernel"]),
        (LAGUERRE, _laguerre_modes(1.0, [0.7, -0.3, 0.2]), ["spectral", "kernel"]),
        (BESSEL, bump(1.5, 0.8), ["kernel", "hankel"]),
    ],
    ids=["classical", "hermite", "laguerre", "bessel"],
)
def test_phase_is_exact_for_real_inputs(setting, f, routes):
    beta = 0.7
    y, t = np.array([0.5, 1.2]), np.array([0.4, 1.1])
    vals = [poisson_apply(setting, beta, f, y, t, route=r) for r in routes]
    for v in vals:
        assert np.max(np.abs((v / _phase(beta)).imag)) <= 1e-8 * np.max(np.abs(v))
    for v in vals[1:]:
        assert np.max(np.abs(v - vals[0])) <= 1e-6 * np.max(np.abs(vals[0]))


def test_semigroup_commutes_with_derivative_spectrally():
    f = gaussian(0.2, 0.9)
    prof = hermite_profile(f, 64)
    s, t, beta = 0.3, 0.6, 0.8
    x = np.linspace(-2, 2, 7)
    shifted = SpectralProfile(prof.coefficients * np.exp(-s * np.sqrt(prof.eigenvalues)), prof.eigenvalues, prof.basis)
    a = frac_dt_spectral(prof, beta, t + s, x)
    b = frac_dt_spectral(shifted, beta, t, x)
    assert np.max(np.abs(a - b)) <= 1e-14


def test_semigroup_commutes_with_derivative_by_quadrature():
    f = gaussian(0.0, 0.8)
    s, t, beta = 0.3, 0.5, 0.5
    y = np.array([-0.8, 0.0, 0.9])
    # P_s f sampled and pushed through the kernel route again
    ps = SampledFunction.from_callable(
        lambda x: poisson_apply(HERMITE, 0.0, f, x, np.full(np.shape(x), s), route="kernel").real,
        (-9.0, 9.0),
        n=121,
        scale=0.4,
    )
    a = poisson_apply(HERMITE, beta, f, y, np.full(3, t + s), route="kernel") / (t + s) ** beta
    b = poisson_apply(HERMITE, beta, ps, y, np.full(3, t), route="kernel") / t ** beta
    assert np.max(np.abs(a - b)) <= 1e-5 * np.max(np.abs(a))


def test_poisson_apply_vector_valued_input():
    f = gaussian(0.0, 1.0)
    g = bump(0.5, 1.0)
    v = stack([f, g])
    y, t = np.array([0.0, 1.0]), np.array([0.5, 0.5])
    out = poisson_apply(CLASSICAL, 0.5, v, y, t)
    assert out.shape == (2, 2)
    assert np.allclose(out[:, 0], poisson_apply(CLASSICAL, 0.5, f, y, t), rtol=1e-12)
    assert np.allclose(out[:, 1], poisson_apply(CLASSICAL, 0.5, g, y, t), rtol=1e-12)


def test_poisson_apply_route_errors():
    with pytest.raises(CapabilityError):
        poisson_apply(CLASSICAL, 0.5, gaussian(), np.array([0.0]), np.array([1.0]), route="spectral")
    with pytest.raises(CapabilityError):
        poisson_apply(HERMITE, 0.5, gaussian(), np.array([0.0]), np.array([1.0]), route="hankel")
    with pytest.raises(CapabilityError):
        poisson_apply(SettingDescriptor.classical(2), 0.5, gaussian(), np.array([0.0]), np.array([1.0]))
    with pytest.raises(DomainError):
        poisson_apply(BESSEL, 0.5, bump(1.5, 0.8), np.array([-1.0]), np.array([1.0]))
    with pytest.raises(DomainError):
        poisson_apply(CLASSICAL, 0.5, gaussian(), np.array([0.0]), np.array([1.0]), route="magic")


@pytest.mark.parametrize("setting, route", [
    (SettingDescriptor("hermite", n=1), "spectral"),
    (SettingDescriptor.laguerre(1.0), "theta"),
    (SettingDescriptor.bessel(1.0), "subordination"),
])
def test_kernel_rejects_unavailable_route(setting, route):
    with pytest.raises(CapabilityError):
        frac_poisson_kernel(setting, 0.5, 1.0, 0.5, 0.7, route=route)
