import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wickito import ProcessModel
from wickito.errors import DomainError, ParameterError
from wickito.hermite import hermite_fn_table
from wickito.spectral import (
    SampledFunction,
    SpectralDensity,
    Tm_indicator_coeff,
    apply_Tm,
    covariance_integral,
    fbm_constant,
    fbm_covariance,
    parse_preset,
    preset,
    quartic_variance,
    r_levy,
    r_of_t,
    r_prime,
)

PRESETS = ["white", "quartic", "fbm:H=0.3", "fbm:H=0.5", "fbm:H=0.7"]


def test_preset_values():
    assert preset("fbm", H=0.5)(3.0) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert preset("quartic")(0.0) == 0.0
    assert preset("fbm", H=0.7)(2.0) == pytest.approx(2**-0.4 / (2 * math.pi), rel=1e-15)
    assert preset("fbm", H=0.7)(2.0) == pytest.approx(0.1206, abs=5e-5)


@pytest.mark.parametrize("spec", PRESETS)
def test_presets_even_and_bounded(spec):
    m = parse_preset(spec)
    u = np.logspace(-5, 2, 300)
    assert np.allclose(m(u), m(-u), rtol=1e-12, atol=0)
    assert m.check_bound()
    assert parse_preset(m.spec).spec == m.spec


def test_fbm_below_half_needs_polynomial_growth():
    m = preset("fbm", H=0.3)
    assert m.N == 1
    assert not SpectralDensity(m.func, m.K, m.b, 0).check_bound()


def test_check_bound_rejects_odd_density():
    m = SpectralDensity(lambda u: np.where(u > 0, 1.0, 0.5), K=1.0, b=0.0, N=0)
    assert not m.check_bound(np.linspace(0.1, 0.9, 9))


@pytest.mark.parametrize("text", ["nope", "fbm", "fbm:H=1.2", "fbm:H", "fbm:H=abc", "white:x=1"])
def test_bad_presets(text):
    with pytest.raises(ParameterError):
        parse_preset(text)


def test_bad_density_parameters():
    with pytest.raises(ParameterError):
        SpectralDensity(lambda u: u, K=1.0, b=2.0, N=0)
    with pytest.raises(ParameterError):
        SpectralDensity(lambda u: u, K=-1.0, b=0.0, N=0)


def test_sampled_function_csv_round_trip(tmp_path):
    f = SampledFunction.on_window(np.sin, -1.0, 1.0, 16)
    f.to_csv(tmp_path / "f.csv")
    g = SampledFunction.from_csv(tmp_path / "f.csv")
    assert g.start == f.start and g.step == pytest.approx(f.step, rel=1e-12)
    assert np.array_equal(g.values, f.values)
    (tmp_path / "bad.csv").write_text("t,value\n0,1\n1,2\n3,4\n")
    with pytest.raises(ParameterError):
        SampledFunction.from_csv(tmp_path / "bad.csv")


def _bumps(x, params):
    return sum(a * np.exp(-((x - c) ** 2) / (2 * s * s)) for a, c, s in params)


def test_white_multiplier_is_identity():
    f = SampledFunction.on_window(lambda x: _bumps(x, [(1.0, 0.3, 0.7), (-0.5, -1.0, 1.2)]), -40, 40, 4096)
    g = apply_Tm(f, preset("white"))
    assert np.max(np.abs(g.values - f.values)) < 1e-9


@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-3, 3), st.floats(0.4, 2.0)), min_size=1, max_size=3))
@settings(max_examples=15)
def test_plancherel(params):
    m = preset("quartic")
    f = SampledFunction.on_window(lambda x: _bumps(x, params), -40, 40, 8192)
    tf = apply_Tm(f, m)
    lhs = np.sum(tf.values**2) * tf.step

    def spectrum(u):
        fhat = sum(a * s * math.sqrt(2 * math.pi) * np.exp(-(s * u) ** 2 / 2 - 1j * u * c) for a, c, s in params)
        return float(m(u)) * abs(fhat) ** 2

    rhs = 2 * integrate.quad(spectrum, 0, 40, limit=400, epsabs=0, epsrel=1e-12)[0]
    assert lhs == pytest.approx(rhs, rel=1e-6, abs=1e-14)


def test_quartic_spreads_support():
    def bump(x):
        inside = (x > 0) & (x < 1)
        out = np.zeros_like(x)
        xi = x[inside]
        out[inside] = np.exp(-1.0 / (xi * (1 - xi)))
        return out

    f = SampledFunction.on_window(bump, -20, 20, 8192)
    g = apply_Tm(f, preset("quartic"))
    outside = (g.grid < -0.5) | (g.grid > 1.5)
    assert np.max(np.abs(g.values[outside])) > 1e-3 * np.max(np.abs(g.values))


@pytest.mark.parametrize("spec", ["white", "quartic", "fbm:H=0.7"])
def test_Tm_keeps_even_functions_even(spec):
    f = SampledFunction.on_window(lambda x: np.exp(-x * x), -20, 20, 4096)
    g = apply_Tm(f, parse_preset(spec))
    # the grid runs from -20 to 20 - step, so x_i <-> x_{n-i} are mirror points
    assert np.max(np.abs(g.values[1:] - g.values[1:][::-1])) < 1e-9 * np.max(np.abs(g.values))


def test_indicator_coefficient_at_zero_and_bad_mode():
    assert Tm_indicator_coeff(0.0, 3, preset("white")) == 0.0
    with pytest.raises(ParameterError):
        Tm_indicator_coeff(1.0, 0, preset("white"))


@pytest.mark.parametrize("spec,tol", [("white", 1e-6), ("quartic", 1e-6), ("fbm:H=0.7", 1e-3)])
def test_fft_route_matches_frequency_quadrature(spec, tol):
    m = parse_preset(spec)
    model = ProcessModel(m, 12)
    ts = np.array([-1.3, 0.4, 1.0, 2.5])
    c = model.coefficients(ts)[0]
    for k in (1, 2, 5, 12):
        fft = Tm_indicator_coeff(ts, k, m)
        assert np.max(np.abs(fft - c[:, k - 1])) < tol


def test_white_coefficients_are_hermite_integrals():
    model = ProcessModel(preset("white"), 8)
    x, w = np.polynomial.legendre.leggauss(60)
    t = 1.7
    nodes, weights = 0.5 * t * (x + 1), 0.5 * t * w
    direct = hermite_fn_table(8, nodes) @ weights
    assert np.allclose(model.c(t), direct, atol=1e-12)
    assert np.allclose(model.w(t), hermite_fn_table(8, np.array([t]))[:, 0], atol=1e-12)


def test_r_examples():
    assert r_of_t(0.0, preset("white")) == 0.0
    assert r_of_t(1.0, preset("white")) == pytest.approx(1.0, abs=1e-12)
    for t in (0.3, 1.0, 3.0):
        assert r_prime(t, preset("white")) == pytest.approx(1.0, abs=1e-10)
    for H in (0.3, 0.7):
        v = fbm_constant(H)
        assert r_of_t(1.7, preset("fbm", H=H)) == pytest.approx(v * 1.7 ** (2 * H), rel=1e-10)
        assert r_prime(1.0, preset("fbm", H=H)) == pytest.approx(2 * H * v, rel=1e-10)
    for t in (0.1, 1.0, 5.0):
        assert r_of_t(t, preset("quartic")) == pytest.approx(quartic_variance(t), rel=1e-10)


def test_fbm_constant_continuous_at_half():
    assert fbm_constant(0.5 + 1e-7) == pytest.approx(1.0, abs=1e-5)
    assert fbm_constant(0.5) == 1.0


def test_r_prime_guarded_at_singular_origin():
    with pytest.raises(DomainError):
        r_prime(0.0, preset("fbm", H=0.3))
    assert r_prime(0.0, preset("fbm", H=0.7)) == 0.0


@pytest.mark.parametrize("spec", PRESETS)
@given(t=st.floats(1e-3, 6.0))
@settings(max_examples=10)
def test_r_even_nonnegative_and_smooth(spec, t):
    m = parse_preset(spec)
    r = r_of_t(t, m)
    assert r >= 0 and r == r_of_t(-t, m)
    assert r_levy(t, m) == 0.5 * r
    h = 1e-4 * max(t, 1e-2)
    if t > 2 * h:
        fd = (r_of_t(t + h, m) - r_of_t(t - h, m)) / (2 * h)
        assert fd == pytest.approx(r_prime(t, m), rel=1e-5, abs=1e-9)


@pytest.mark.parametrize("spec", PRESETS)
def test_covariance_integral_matches_variance_form(spec):
    m = parse_preset(spec)
    for t, s in [(1.0, 0.5), (2.0, -0.7), (0.3, 0.3)]:
        expected = 0.5 * (r_of_t(t, m) + r_of_t(s, m) - r_of_t(t - s, m))
        assert covariance_integral(t, s, m) == pytest.approx(expected, rel=1e-9, abs=1e-13)
    assert covariance_integral(0.0, 1.0, m) == 0.0


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_fbm_covariance_half_closed_form(H):
    m = preset("fbm", H=H)
    for t, s in [(1.0, 0.5), (0.5, 2.0), (2.0, 2.0)]:
        assert covariance_integral(t, s, m) == pytest.approx(fbm_covariance(t, s, H), rel=1e-8)
