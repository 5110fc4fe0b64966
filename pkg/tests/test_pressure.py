"""Pressure family tests: frozen point values, limits, fairness, convexity."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpsim.errors import ConfigurationError
from bpsim.pressure import (
    ConvexityReport,
    PressureFunction,
    PressureParams,
    check_convexity,
    check_fairness,
)


# Hand-computed: num = 25/500 + (2 - 50/500) * (25/50)^4 = 0.05 + 1.9 * 0.0625
#              = 0.16875, den = 1 + (25/50)^3 = 1.125, ratio = 0.15 exactly.
def test_normalized_value_quarter_full_small_node():
    f = PressureFunction.normalized(m=4, c_infinity=500)
    assert abs(f.evaluate(25, 50) - 0.15) <= 1e-12


def test_normalized_empty_node_is_exactly_zero():
    for m in (2, 4):
        for c in (1, 50, 200):
            f = PressureFunction.normalized(m=m, c_infinity=200)
            assert f.evaluate(0, c) == 0.0


def test_normalized_full_and_overfull_node_is_exactly_one():
    f = PressureFunction.normalized(m=2, c_infinity=200)
    for c in (1, 50, 200):
        for q in (c, c + 1, c + 37, 4 * c):
            assert f.evaluate(q, c) == 1.0


def test_normalized_reduces_to_linear_at_reference_capacity():
    # With c == c_infinity the algebra collapses to q/c_infinity; check a
    # dense grid including both endpoints.
    for m in (2, 4):
        for c_inf in (200.0, 500.0):
            f = PressureFunction.normalized(m=m, c_infinity=c_inf)
            for i in range(1000):
                q = c_inf * i / 999
                assert abs(f.evaluate(q, c_inf) - q / c_inf) <= 1e-12


def test_normalized_known_midpoint_at_reference_capacity():
    f = PressureFunction.normalized(m=2, c_infinity=200)
    assert abs(f.evaluate(120, 200) - 0.6) <= 1e-12


def test_linear_ignores_capacity():
    f = PressureFunction.linear()
    assert f.evaluate(60, 50) == 60.0
    assert f.evaluate(60, 500) == 60.0


def test_relative_divides_by_capacity():
    f = PressureFunction.relative()
    assert f.evaluate(25, 50) == 0.5
    assert f.evaluate(25, 500) == 0.05


def test_normalized_rejects_capacity_above_reference():
    f = PressureFunction.normalized(m=2, c_infinity=200)
    with pytest.raises(ConfigurationError):
        f.evaluate(10, 201)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        PressureParams(m=1.0, c_infinity=200)
    with pytest.raises(ConfigurationError):
        PressureParams(m=2.0, c_infinity=0.5)
    with pytest.raises(ConfigurationError):
        PressureFunction(kind="exponential")
    with pytest.raises(ConfigurationError):
        PressureFunction(kind="normalized")  # params missing


def test_evaluate_rejects_bad_arguments():
    f = PressureFunction.linear()
    with pytest.raises(ConfigurationError):
        f.evaluate(-1, 50)
    with pytest.raises(ConfigurationError):
        f.evaluate(5, 0)


def test_fairness_normalized_slope_matches_reference_capacity():
    # Marginal pressure of an empty node must be 1/c_infinity for every
    # capacity, which is what makes small nodes compete fairly when empty.
    f = PressureFunction.normalized(m=4, c_infinity=500)
    report = check_fairness(f, capacities=[50, 100, 200, 500])
    assert report.fair
    assert report.expected_slope == 1.0 / 500
    for c, slope in report.slopes.items():
        assert abs(slope - 1.0 / 500) <= 1e-4 * (1.0 / 500), (c, slope)


def test_fairness_relative_is_unfair_across_capacities():
    f = PressureFunction.relative()
    report = check_fairness(f, capacities=[50, 500])
    assert not report.fair
    assert abs(report.slopes[50] - 1 / 50) < 1e-6
    assert abs(report.slopes[500] - 1 / 500) < 1e-7


def test_fairness_linear_slope_one():
    report = check_fairness(PressureFunction.linear(), capacities=[50, 500])
    assert report.fair
    assert report.expected_slope == 1.0


def test_convexity_across_parameter_grid():
    for m in (2, 4):
        for c_inf in (200, 500):
            f = PressureFunction.normalized(m=m, c_infinity=c_inf)
            for c in (50, 100, 200):
                report = check_convexity(f, c=c, grid=1000)
                assert isinstance(report, ConvexityReport)
                assert report.convex, (m, c_inf, c, report.worst_second_difference)
                assert report.worst_second_difference >= -1e-9


def test_convexity_rejects_tiny_grid():
    with pytest.raises(ConfigurationError):
        check_convexity(PressureFunction.linear(), c=50, grid=2)


@given(
    m=st.floats(min_value=1.5, max_value=6.0),
    c_inf=st.floats(min_value=50.0, max_value=1000.0),
    frac_c=st.floats(min_value=0.01, max_value=1.0),
    q=st.floats(min_value=0.0, max_value=2000.0),
)
def test_normalized_stays_in_unit_interval(m, c_inf, frac_c, q):
    c = max(1.0, frac_c * c_inf)
    f = PressureFunction.normalized(m=m, c_infinity=c_inf)
    p = f.evaluate(q, c)
    assert 0.0 <= p <= 1.0


@settings(max_examples=200)
@given(
    m=st.floats(min_value=1.5, max_value=6.0),
    c_inf=st.floats(min_value=50.0, max_value=1000.0),
    frac_c=st.floats(min_value=0.05, max_value=1.0),
    q1=st.floats(min_value=0.0, max_value=1.0),
    q2=st.floats(min_value=0.0, max_value=1.0),
)
def test_normalized_monotone_in_queue_length(m, c_inf, frac_c, q1, q2):
    c = max(1.0, frac_c * c_inf)
    lo, hi = sorted((q1 * 1.5 * c, q2 * 1.5 * c))
    f = PressureFunction.normalized(m=m, c_infinity=c_inf)
    assert f.evaluate(hi, c) >= f.evaluate(lo, c) - 1e-9


@given(
    q=st.floats(min_value=0.0, max_value=500.0),
    c=st.floats(min_value=1.0, max_value=500.0),
)
def test_relative_and_linear_agree_with_their_formulas(q, c):
    assert PressureFunction.linear().evaluate(q, c) == q
    assert math.isclose(PressureFunction.relative().evaluate(q, c), q / c, rel_tol=1e-15)


def test_callable_alias():
    f = PressureFunction.normalized(m=2, c_infinity=200)
    assert f(120, 200) == f.evaluate(120, 200)
