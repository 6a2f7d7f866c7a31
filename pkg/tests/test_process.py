import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from wickito import ProcessModel, TimeGrid, dual_norm, pairing, parse_preset
from wickito.chaos import eval_realization
from wickito.errors import ParameterError, RangeError
from wickito.process import (
    CACHE_ENV,
    coordinates,
    parse_range,
    read_paths_csv,
    sample_paths,
    time_points,
    write_paths_csv,
)
from wickito.spectral import fbm_constant, r_levy


def test_time_grid_and_ranges():
    g = TimeGrid.parse("-2:2:0.5")
    assert g.n == 9 and g.step == pytest.approx(0.5)
    assert g.contains([-2.0, 2.0]) and not g.contains([2.1])
    assert parse_range("0:1:0.25") == (0.0, 1.0, 0.25)
    assert np.allclose(time_points("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1.0])
    for bad in ("0:1", "1:0:0.1", "0:1:-1", "a:b:c"):
        with pytest.raises(ParameterError):
            time_points(bad)


def test_coefficients_vanish_at_zero(white, quartic, fbm03):
    for model in (white, quartic, fbm03):
        c, _ = model.coefficients([0.0])
        assert np.all(c == 0.0)
        assert len(model.X_chaos(0.0)) == 0


def test_out_of_grid_time_rejected(white):
    with pytest.raises(RangeError):
        white.c(10.0)


@pytest.mark.parametrize("spec", ["white", "quartic", "fbm:H=0.3", "fbm:H=0.7"])
def test_w_is_derivative_of_c(spec):
    model = ProcessModel(parse_preset(spec), 40)
    t, h = 0.8, 1e-5
    c = model.c(np.array([t - h, t + h]))
    fd = (c[1] - c[0]) / (2 * h)
    assert np.max(np.abs(fd - model.w(t))) < 1e-7


def test_coefficients_do_not_depend_on_batching(fbm07):
    ts = np.linspace(-1, 2, 17)
    batch = fbm07.c(ts)
    single = np.array([fbm07.c(float(t)) for t in ts])
    assert np.array_equal(batch, single)


def test_coefficient_table_cache(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path))
    grid = TimeGrid(-1.0, 1.0, 41)
    first = ProcessModel(parse_preset("fbm:H=0.7"), 30, grid).coeff_table()
    files = list(tmp_path.glob("*.npz"))
    assert [f.stem for f in files] == [first.key]
    again = ProcessModel(parse_preset("fbm:H=0.7"), 30, grid)
    table = again.coeff_table()
    assert np.array_equal(table.c, first.c) and np.array_equal(table.w, first.w)
    # cached rows are served for exact grid points and agree with direct evaluation
    fresh = ProcessModel(parse_preset("fbm:H=0.7"), 30, grid)
    assert np.array_equal(again.c(grid.points[[3, 7]]), fresh.c(grid.points[[3, 7]]))
    other = ProcessModel(parse_preset("fbm:H=0.7"), 31, grid)
    assert other.key != first.key


def test_white_variance_converges(white):
    raw = [ProcessModel(white.density, K).series_variance(1.0, corrected=False) for K in (25, 50, 100, 200)]
    assert all(a < b < 1.0 for a, b in zip(raw, raw[1:]))
    assert white.series_variance(1.0) == pytest.approx(1.0, abs=1e-3)


def test_fbm_half_is_brownian():
    model = ProcessModel(parse_preset("fbm:H=0.5"), 200)
    assert model.series_covariance(1.0, 2.0) == pytest.approx(1.0, abs=1e-3)
    assert model.covariance(1.0, 2.0) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("spec", ["white", "quartic", "fbm:H=0.3", "fbm:H=0.7"])
def test_covariance_structure(spec):
    model = ProcessModel(parse_preset(spec), 50)
    for t in (0.4, 1.0, 2.0):
        assert model.covariance(t, t) == pytest.approx(2 * r_levy(t, model.density), rel=1e-12)
        assert model.covariance(0.0, t) == 0.0
        assert model.covariance(-t, -t) == pytest.approx(model.covariance(t, t), rel=1e-12)
    c = model.c(np.array([1.3, -1.3]))
    assert np.dot(c[0], c[0]) == pytest.approx(np.dot(c[1], c[1]), rel=1e-6)


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_fbm_covariance_is_half_VH_form(H):
    model = ProcessModel(parse_preset(f"fbm:H={H}"), 20)
    v = fbm_constant(H)
    cov = model.covariance(1.0, 0.5)
    assert cov == pytest.approx(0.5 * v * (1 + 0.5 ** (2 * H) - 0.5 ** (2 * H)), rel=1e-8)


@pytest.mark.parametrize("spec", ["white", "quartic", "fbm:H=0.3", "fbm:H=0.7"])
def test_series_covariance_within_five_percent(spec):
    model = ProcessModel(parse_preset(spec), 200)
    for t, s in [(0.25, 0.25), (0.25, 2.0), (1.0, 1.5), (2.0, 2.0)]:
        exact = model.covariance(t, s)
        assert model.series_covariance(t, s) == pytest.approx(exact, rel=0.05)


@pytest.mark.parametrize("spec", ["white", "fbm:H=0.7"])
def test_raw_series_increases_toward_covariance(spec):
    d = parse_preset(spec)
    exact = ProcessModel(d, 10).covariance(1.0, 1.0)
    raw = [ProcessModel(d, K).series_variance(1.0, corrected=False) for K in (50, 100, 200)]
    assert raw[0] < raw[1] < raw[2] < exact


def test_w_chaos_finite_and_membership_bound_stable(quartic):
    for t in np.linspace(0, 2, 5):
        assert np.isfinite(dual_norm(quartic.W_chaos(t), quartic.N + 3))
    partial = quartic.w_membership_bound()
    increments = np.diff(partial)
    assert np.all(increments >= 0) and np.isfinite(partial[-1])
    # tail contributions shrink: the last fifty modes add less than the first fifty
    assert partial[-1] - partial[-51] < partial[49]
    assert increments[-1] < 1e-6 * partial[-1]


def test_white_w_is_hermite_function(white):
    from wickito.hermite import hermite_fn_table

    t = 0.6
    assert np.allclose(white.w(t)[:30], hermite_fn_table(30, np.array([t]))[:, 0], atol=1e-12)


def test_lipschitz_envelope(quartic):
    fit = quartic.lipschitz_fit(50, np.linspace(-3, 3, 241))
    assert fit.C1 >= 0 and fit.C2 > 0
    rng = np.random.default_rng(3)
    t = rng.uniform(-3, 3, 40)
    s = t + rng.uniform(-0.2, 0.2, 40)
    w = quartic.w(np.concatenate([t, s]))[:, :50]
    lhs = np.abs(w[:40] - w[40:])
    k = np.arange(1, 51)
    assert np.all(lhs <= np.abs(t - s)[:, None] * fit.envelope(k)[None, :] * 1.05 + 1e-12)


def test_white_lipschitz_exponent_below_prediction(white):
    fit = white.lipschitz_fit(50)
    assert fit.exponent < (fit.N + 2) / 2


def test_derivative_check_bounds(quartic, white):
    fit = quartic.lipschitz_fit(50)
    err = quartic.derivative_check(1.0, 1e-2)
    assert err <= fit.C_N_l2(quartic.modes) * 1e-2 / 2
    # on the grid step: finite and bounded
    assert np.isfinite(white.derivative_check(0.5, white.grid.step))
    assert white.derivative_check(0.5, white.grid.step) < 1.0
    with pytest.raises(ParameterError):
        white.derivative_check(0.5, 0.0)


def test_sample_paths_start_at_zero_and_are_reproducible(white):
    ts = time_points("0:1:0.1")
    a = sample_paths(white, ts, 4, seed=11)
    b = sample_paths(white, ts, 4, seed=11)
    assert np.array_equal(a, b) and np.all(a[0] == 0.0)
    assert not np.array_equal(a, sample_paths(white, ts, 4, seed=11, stream=1))
    with pytest.raises(ParameterError):
        coordinates(3, 0, 1)


def test_white_variance_by_monte_carlo(white):
    x = sample_paths(white, [1.0, 2.0], 100_000, seed=5)
    var = np.var(x[0])
    se = math.sqrt(2 / len(x[0])) * white.series_variance(1.0, corrected=False)
    assert abs(var - white.series_variance(1.0, corrected=False)) <= 3 * se
    inc1, inc2 = x[0], x[1] - x[0]
    se_diff = math.sqrt(2 / len(inc1)) * (np.var(inc1) + np.var(inc2)) / math.sqrt(2)
    assert abs(np.var(inc1) - np.var(inc2)) <= 3 * se_diff + 0.02


@pytest.mark.parametrize("spec", ["white", "fbm:H=0.3", "fbm:H=0.7", "quartic"])
def test_gaussianity(spec):
    model = ProcessModel(parse_preset(spec), 100)
    x = sample_paths(model, [1.3], 40_000, seed=2)[0]
    n = len(x)
    assert abs(stats.skew(x)) <= 4 * math.sqrt(6 / n)
    assert abs(stats.kurtosis(x)) <= 4 * math.sqrt(24 / n)


def test_stationary_increments(fbm07):
    pairs = [(0.0, 0.5), (0.5, 1.0), (1.0, 1.5), (-1.0, -0.5), (0.0, 1.0), (1.0, 2.0), (-0.5, 0.5)]
    ts = sorted({t for p in pairs for t in p})
    x = sample_paths(fbm07, ts, 40_000, seed=9)
    col = {t: x[i] for i, t in enumerate(ts)}
    for s, t in pairs:
        inc = col[t] - col[s]
        # series second moment of the increment, which sampled paths realize exactly
        c = fbm07.c(np.array([s, t]))
        target = float(np.sum((c[1] - c[0]) ** 2))
        se = math.sqrt(2 / len(inc)) * target
        assert abs(np.mean(inc**2) - target) <= 4 * se
        # and its mean depends on t - s only, up to series truncation
        assert target == pytest.approx(fbm07.r(t - s), rel=0.05)


def test_paths_csv_round_trip(tmp_path, white):
    ts = time_points("0:0.5:0.25")
    paths = sample_paths(white, ts, 2, seed=1)
    write_paths_csv(tmp_path / "p.csv", ts, paths, ["hello"])
    text = (tmp_path / "p.csv").read_text().splitlines()
    assert text[0] == "# hello" and text[1] == "t,path_0,path_1"
    t2, p2 = read_paths_csv(tmp_path / "p.csv")
    assert np.array_equal(t2, ts) and np.array_equal(p2, paths)


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=20)
def test_realization_matches_linear_form(t, s):
    model = ProcessModel(parse_preset("quartic"), 30)
    z = coordinates(30, 3, seed=4)
    X = model.X_chaos(t)
    assert np.allclose(eval_realization(X, z), z @ model.c(t), atol=1e-12)
    # first-order pairing is the raw series covariance; the Wick product has mean zero
    Y = model.X_chaos(s)
    assert pairing(X, Y) == pytest.approx(model.series_covariance(t, s, corrected=False), abs=1e-14)
    assert X.wick(Y).expectation() == 0.0
