import math

import mpmath
import numpy as np
import pytest

from motslab.foliation import (
    ChartError, FoliationChart, NoMOTSError, build_chart, expansion_bounds,
    geodesic_distance, principal_eigenvalue,
)
from motslab.radial_data import custom, flat, schwarzschild, theta_plus


def schwarzschild_tau(r, m=1.0):
    """Closed form of int_{2m}^r (1 - 2m/x)^(-1/2) dx, evaluated with mpmath."""
    with mpmath.workdps(40):
        r = mpmath.mpf(r)
        a = mpmath.sqrt(r * (r - 2 * m))
        b = 2 * m * mpmath.asinh(mpmath.sqrt((r - 2 * m) / (2 * m)))
        return float(a + b)


@pytest.fixture(scope="module")
def chart():
    return build_chart(schwarzschild(1.0))


def test_flat_distance():
    assert geodesic_distance(flat(), 2.0, r_h=1.0) == pytest.approx(1.0, rel=1e-14)
    assert geodesic_distance(schwarzschild(1.0), 2.0) == 0.0


def test_distance_below_horizon_rejected():
    with pytest.raises(ChartError):
        geodesic_distance(schwarzschild(1.0), 1.9)


@pytest.mark.parametrize("r", [2 + 2**-40, 2.001, 2.5, 3.0, 10.0, 1000.0])
def test_distance_matches_closed_form(r):
    assert geodesic_distance(schwarzschild(1.0), r) == pytest.approx(schwarzschild_tau(r), rel=1e-12)


def test_near_horizon_distance_law():
    r = 2 + 1e-8
    ratio = geodesic_distance(schwarzschild(1.0), r) / (2 * math.sqrt(2) * math.sqrt(r - 2))
    assert ratio == pytest.approx(1.0, abs=1e-3)


def test_principal_eigenvalue_schwarzschild():
    assert principal_eigenvalue(schwarzschild(1.0)) == pytest.approx(0.25, abs=1e-6)


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0])
def test_principal_eigenvalue_scaling(m):
    assert principal_eigenvalue(schwarzschild(m)) * m**2 == pytest.approx(0.25, abs=1e-5)


def test_principal_eigenvalue_finite_difference_oracle():
    # One-sided difference of theta^+ in tau, independent of the extrapolation.
    data = schwarzschild(2.0)
    tau = 1e-6
    r = 4 + tau**2 / 16  # tau ~ 2 sqrt(2m) sqrt(r - 2m) near the horizon
    slope = float(theta_plus(data, r)) / geodesic_distance(data, r)
    assert slope == pytest.approx(1 / 16, rel=1e-6)


def test_principal_eigenvalue_no_mots():
    with pytest.raises(NoMOTSError):
        principal_eigenvalue(flat())


def test_chart_matches_quadrature(chart):
    for r in [2 + 1e-12, 2 + 1e-6, 2.1, 5.0, 1e3]:
        assert chart.s_of_r(r) == pytest.approx(geodesic_distance(chart.data, r, 2.0), rel=1e-10)


def test_foliations_a_and_b_coincide():
    data = schwarzschild(1.0)
    a = FoliationChart.build(data, 2.0, 0.25, kind="A")
    b = FoliationChart.build(data, 2.0, 0.25, kind="B")
    r = np.geomspace(1e-10, 10, 50) + 2
    np.testing.assert_allclose(a.s_of_r(r), b.s_of_r(r), rtol=1e-10)


def test_chart_is_increasing_from_zero(chart):
    r = 2 + np.geomspace(1e-14, 100, 400)
    s = chart.s_of_r(r)
    assert np.all(np.diff(s) > 0)
    assert s[0] < 1e-6


def test_points_at_inverts(chart):
    target = np.geomspace(1e-6, 0.1, 30)
    r, s = chart.points_at(target)
    # r is a double, so s can only be hit up to the rounding of r - 2.
    quantum = np.spacing(2.0) * chart.data.F(r) / target
    assert np.all(np.abs(s / target - 1) <= quantum + 1e-12)
    np.testing.assert_array_equal(s, chart.s_of_r(r))


def test_expansion_bounds_hold_on_grid(chart):
    lam, Lambda = expansion_bounds(chart.data, 0.1, chart)
    r, s = chart.points_at(np.geomspace(1e-7, 0.1, 2000))
    th = theta_plus(chart.data, r)
    assert np.all(lam * s - Lambda * s**2 <= th)
    assert np.all(th <= lam * s + Lambda * s**2)
    # theta^+/s -> lambda
    assert th[0] / s[0] == pytest.approx(lam, rel=1e-6)


def test_expansion_bound_is_tight(chart):
    _, Lambda = expansion_bounds(chart.data, 0.1, chart)
    r, s = chart.points_at(np.geomspace(1e-6 * 0.1, 0.1, 10_000))
    th = theta_plus(chart.data, r)
    assert np.max(np.abs(th - 0.25 * s) / s**2) >= Lambda / 1.02


def test_expansion_bounds_linear_toy():
    # F = 1 and k_tan = (r - 1)/2 - 2/r make theta^+ = (r - 1)/2 = tau/2 exactly
    # in real arithmetic; the grid starts at 1e-3 s_max so that the rounding
    # of the sum k_tan + 2/r stays far below Lambda s^2.
    data = custom("1", "0", "(r - 1)/2 - 2/r", r_min=0.5)
    lam, Lambda = expansion_bounds(data, 0.1, s_min_ratio=1e-3)
    assert lam == pytest.approx(0.5, rel=1e-8)
    assert Lambda == pytest.approx(0.0, abs=1e-6)


def test_horizon_at_infinite_distance_is_rejected():
    # F ~ 1/(r - 2): a cylindrical end rather than a MOTS at finite distance
    data = custom("sqrt(r^5/((r-2)*(r^4-16)))", r_min=2.0)
    with pytest.raises(ChartError, match="infinite geodesic distance"):
        geodesic_distance(data, 3.0, 2.0)
