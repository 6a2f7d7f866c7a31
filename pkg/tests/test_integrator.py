import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wickito import ChaosVector, ProcessModel, dual_norm, parse_preset, wick
from wickito.chaos import max_abs_diff
from wickito.errors import ParameterError
from wickito.integrator import (
    ConvergenceReport,
    IntegrandFn,
    convergence_study,
    fit_slope,
    partition_points,
    reference_integral,
    riemann_sum,
    riemann_error_bound,
)


@pytest.fixture(scope="module")
def small():
    return ProcessModel(parse_preset("white"), 40)


@pytest.fixture(scope="module")
def small_fbm():
    return ProcessModel(parse_preset("fbm:H=0.7"), 40)


def test_partitions():
    assert np.allclose(partition_points(0, 1, 4), [0, 0.25, 0.5, 0.75, 1])
    assert np.array_equal(partition_points(0, 1, [0, 0.1, 1]), [0, 0.1, 1])
    for bad in (0, [0, 0.5], [0, 0.6, 0.5, 1]):
        with pytest.raises(ParameterError):
            partition_points(0, 1, bad)
    with pytest.raises(ParameterError):
        partition_points(1, 0, 4)


@given(st.lists(st.floats(0.001, 0.999), min_size=0, max_size=10, unique=True))
@settings(max_examples=25)
def test_constant_integrand_telescopes_exactly(inner):
    model = ProcessModel(parse_preset("fbm:H=0.7"), 25)
    F = ChaosVector({"0": 2.0, "0,1": -0.5})
    Y = IntegrandFn.fixed(F, p=4)
    pts = np.array([0.0] + sorted(inner) + [1.0])
    got = riemann_sum(Y, model, 0.0, 1.0, pts)
    expected = wick(F, model.X_chaos(1.0) - model.X_chaos(0.0))
    assert got == reference_integral(Y, model, 0.0, 1.0)
    assert max_abs_diff(got, expected) == 0.0


def test_reference_of_one_is_coefficient_difference(small):
    ref = reference_integral(IntegrandFn.constant_value(1.0), small, 0.2, 1.1)
    assert np.array_equal(ref.first_order_coeffs(small.modes), small.c(1.1) - small.c(0.2))


def test_reference_of_x_has_no_constant_term(small):
    ref = reference_integral(IntegrandFn.process(small), small, 0.0, 1.0)
    assert ref.expectation() == 0.0
    assert set(ref.orders) == {2}


def test_int_x_dx_is_half_wick_square(small, small_fbm):
    for model in (small, small_fbm):
        ref = reference_integral(IntegrandFn.process(model), model, 0.0, 1.0)
        X1 = model.X_chaos(1.0)
        assert max_abs_diff(ref, wick(X1, X1) / 2) < 1e-12


def test_riemann_agrees_with_reference_at_fine_partition(small):
    Y = IntegrandFn.process(small)
    ref = reference_integral(Y, small, 0.0, 1.0)
    p = small.N + 5
    err = dual_norm(riemann_sum(Y, small, 0.0, 1.0, 4096) - ref, p)
    assert err <= riemann_error_bound(Y, small, 0.0, 1.0, 4096, p)
    assert err < 2e-6


def test_linearity_on_a_shared_partition(small):
    Y1 = IntegrandFn.process(small)
    Y2 = IntegrandFn.wick_power(small, 2)
    a, b = 1.5, -0.75
    both = riemann_sum(Y1.combine(Y2, a, b), small, 0.0, 1.0, 64)
    apart = a * riemann_sum(Y1, small, 0.0, 1.0, 64) + b * riemann_sum(Y2, small, 0.0, 1.0, 64)
    assert max_abs_diff(both, apart) <= 1e-15


def test_additivity_in_the_interval(small):
    Y = IntegrandFn.process(small)
    tol = 1e-10
    whole = reference_integral(Y, small, 0.0, 1.0, tol)
    parts = reference_integral(Y, small, 0.0, 0.4, tol) + reference_integral(Y, small, 0.4, 1.0, tol)
    assert max_abs_diff(whole, parts) <= 2 * tol


def test_dual_norm_of_results_decreases_in_p(small):
    R = riemann_sum(IntegrandFn.wick_power(small, 2), small, 0.0, 1.0, 16)
    norms = [dual_norm(R, p) for p in range(0, 9)]
    assert all(b <= a for a, b in zip(norms, norms[1:]))


def test_anticipating_integrand_converges(small):
    # Y(t) = X(b) looks into the future; the Wick sum still converges (here it telescopes)
    Xb = small.X_chaos(1.0)
    Y = IntegrandFn.fixed(Xb, p=5)
    R = riemann_sum(Y, small, 0.0, 1.0, 37)
    assert max_abs_diff(R, wick(Xb, Xb)) < 1e-15

    # a genuinely time-dependent anticipating integrand: Y(t) = X(1 - t)
    def rev(t):
        return small.X_chaos(1.0 - t)

    Y2 = IntegrandFn.from_callable(rev, np.arange(1, small.modes + 1)[:, None], p=5, name="X(1-t)")
    rep = convergence_study(Y2, small, 0.0, 1.0, [8, 16, 32, 64, 128], p=5)
    assert rep.slope < -0.9


def test_from_callable_checks_support(small):
    Y = IntegrandFn.from_callable(lambda t: ChaosVector.basis((0, 2), t), np.array([[1]]), p=4)
    with pytest.raises(ParameterError):
        riemann_sum(Y, small, 0.0, 1.0, 4)


def test_convergence_study_requires_large_enough_p(small):
    with pytest.raises(ParameterError):
        convergence_study(IntegrandFn.process(small), small, 0.0, 1.0, [8, 16], p=small.N + 3)


def test_rate_and_error_bound(small_fbm):
    Y = IntegrandFn.process(small_fbm)
    rep = convergence_study(Y, small_fbm, 0.0, 1.0, [8, 16, 32, 64, 128, 256], p=small_fbm.N + 5)
    assert -1.1 < rep.slope < -0.9
    assert all(e <= b for e, b in zip(rep.errors, rep.bounds))
    # the bound has no finite Vage constant when p - N - 3 <= 1
    assert riemann_error_bound(Y, small_fbm, 0.0, 1.0, 8, small_fbm.N + 4) == math.inf


def test_report_serialization(tmp_path):
    rep = ConvergenceReport([8, 16, 32], [1e-2, 5e-3, 2.5e-3], fit_slope([8, 16, 32], [1e-2, 5e-3, 2.5e-3], 0),
                            5.0, [1.0, 0.5, 0.25], {"preset": "white"})
    assert rep.slope == pytest.approx(-1.0)
    doc = json.loads(rep.to_json())
    assert doc["slope"] == rep.slope and doc["preset"] == "white"
    rep.write_csv(tmp_path / "r.csv", ["note"])
    assert (tmp_path / "r.csv").read_text().splitlines()[:3] == ["# note", "n,error,bound", "8,0.01,1.0"]
    with pytest.raises(ParameterError):
        ConvergenceReport([16, 8], [1.0, 1.0], None, 5.0)
    assert fit_slope([8, 16], [0.0, 0.0]) is None
