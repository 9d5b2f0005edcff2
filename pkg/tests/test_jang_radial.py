import math

import mpmath
import numpy as np
import pytest

from motslab.foliation import NoMOTSError
from motslab.jang_radial import (
    JangSolverError, auxiliary_continuation, detect_horizon, jang_operator,
    jang_second_derivative, local_operator, mean_curvature_operator, schwarzschild_slope,
    schwarzschild_slope_derivative, solve_auxiliary, solve_blowup, verify_blowup_rate,
)
from motslab.radial_data import DataError, custom, flat, schwarzschild, theta_plus


def closed_form_height(r, m=1.0):
    """f0(r) = int_r^inf sqrt(16x/((x-2)(x^4-16))) dx (m = 1, scaled), by mpmath."""
    with mpmath.workdps(30):
        x = mpmath.mpf(r) / m
        g = lambda y: mpmath.sqrt(16 * y / ((y - 2) ** 2 * (y + 2) * (y * y + 4)))
        return float(m * mpmath.quad(g, [x, 2 * x, mpmath.inf]))


@pytest.fixture(scope="module")
def blowup():
    return solve_blowup(schwarzschild(1.0))


@pytest.fixture(scope="module")
def blowup_m2():
    return solve_blowup(schwarzschild(2.0))


@pytest.fixture(scope="module")
def aux_path():
    return auxiliary_continuation(schwarzschild(1.0), [1e-1, 1e-2, 1e-3, 1e-8])


# operator ---------------------------------------------------------------

def test_slope_value_at_3():
    assert schwarzschild_slope(1.0, 3.0) == pytest.approx(-math.sqrt(48 / 65), rel=1e-15)


def test_slope_scaling():
    assert schwarzschild_slope(2.0, 6.0) == pytest.approx(schwarzschild_slope(1.0, 3.0), rel=1e-15)
    with pytest.raises(DataError):
        schwarzschild_slope(1.0, 2.0)


def test_slope_derivative_matches_difference():
    r, h = 3.0, 1e-5
    fd = (schwarzschild_slope(1.0, r + h) - schwarzschild_slope(1.0, r - h)) / (2 * h)
    assert schwarzschild_slope_derivative(1.0, r) == pytest.approx(fd, rel=1e-8)


def test_closed_form_solves_jang_equation():
    data = schwarzschild(1.0)
    r = np.geomspace(2.0001, 100.0, 500)
    fp = schwarzschild_slope(1.0, r)
    fpp = schwarzschild_slope_derivative(1.0, r)
    assert np.max(np.abs(jang_operator(data, r, fp, fpp))) < 1e-8


def test_closed_form_far_field():
    r = 1e4
    assert -schwarzschild_slope(1.0, r) * r**2 == pytest.approx(4.0, rel=1e-3)


def test_flat_constant_graph_is_exact_zero():
    assert jang_operator(flat(), 3.0, 0.0, 0.0) == 0.0


def test_operator_has_no_height_argument():
    # J depends on (r, f', f'') only: shifting f changes nothing by construction,
    # and equal slope data give bit-identical residuals.
    data = custom("1 + 1/r", "0.1/r^2", "0.2/r^2", r_min=0.5)
    a = jang_operator(data, 2.0, -0.3, 0.7)
    b = jang_operator(data, 2.0, -0.3, 0.7)
    assert a == b


def test_second_derivative_inverts_operator():
    data = custom("1 + 1/r", "0.1/r^2", "0.2/r^2", r_min=0.5)
    r, fp = 2.0, -0.4
    fpp = jang_second_derivative(data, r, fp)
    assert jang_operator(data, r, fp, fpp) == pytest.approx(0.0, abs=1e-14)


def test_local_operator_agrees_with_graph_operator():
    # With tau = r (F = 1) and lapse 1 the foliation form, evaluated with the
    # leaf trace tr k - k(nu, nu) = k_tan, is the graph operator rewritten.
    data = custom("1", "0.3/r^2", "-0.1/r", r_min=0.5)
    r, fp, fpp = 1.7, -0.8, 0.5
    J_graph = jang_operator(data, r, fp, fpp)
    J_local = local_operator(float(theta_plus(data, r)), data.k_nn(r), data.k_tan(r), fp, fpp)
    assert J_local == pytest.approx(J_graph, rel=1e-12)


# blowup solution --------------------------------------------------------

def test_blowup_matches_closed_form_slope(blowup):
    r = np.linspace(2.001, 50.0, 400)
    np.testing.assert_allclose(blowup.slope(r), schwarzschild_slope(1.0, r), rtol=1e-7)


@pytest.mark.parametrize("r", [2.001, 3.0, 10.0, 100.0])
def test_blowup_height_matches_quadrature(blowup, r):
    assert blowup.height(np.array([r]))[0] == pytest.approx(closed_form_height(r), rel=1e-7, abs=1e-9)


def test_blowup_residual_on_grid(blowup):
    H, _ = mean_curvature_operator(blowup.data, blowup.r, blowup.fp, blowup.fpp)
    J = jang_operator(blowup.data, blowup.r, blowup.fp, blowup.fpp)
    assert np.all(np.abs(J) <= 1e-6 * (1 + np.abs(H)))


def test_blowup_monotone_and_resolved(blowup):
    assert np.all(blowup.fp < 0)
    assert blowup.r[0] - 2.0 <= 1e-10
    # at least 200 samples in every decade of r - r_h from 1e-10 outward
    d = np.log10(blowup.r - 2.0)
    counts, _ = np.histogram(d, bins=np.arange(-10, 4))
    assert counts.min() >= 200


def test_blowup_far_field_coefficient(blowup):
    c, _ = blowup.far_field
    assert c == pytest.approx(4.0, rel=1e-6)


def test_horizon_detection_m2(blowup_m2):
    assert detect_horizon(blowup_m2) == pytest.approx(4.0, abs=1e-6)


def test_blowup_requires_mots():
    with pytest.raises(NoMOTSError):
        solve_blowup(flat())


def test_blowup_rate_m1(blowup):
    rate = verify_blowup_rate(blowup)
    assert rate.slope == pytest.approx(-2.0, abs=0.01)
    assert rate.expected == pytest.approx(-2.0, rel=1e-5)


def test_blowup_rate_m2(blowup_m2):
    assert verify_blowup_rate(blowup_m2).slope == pytest.approx(-4.0, abs=0.04)


def test_boundedness_witness_stable_under_halving(blowup):
    full = verify_blowup_rate(blowup, window=(1e-6, 1e-3)).sup_bounded
    half = verify_blowup_rate(blowup, window=(1e-6, 10**-4.5)).sup_bounded
    assert math.isfinite(full)
    assert half <= full + 1e-12
    # f + 2 ln tau -> 2 ln(2 sqrt 2) - ... converges, so the witness barely moves
    assert abs(full - half) < 0.01


def test_gradient_law(blowup):
    F = blowup.data.F(blowup.r)
    law = -blowup.fp / F * blowup.tau
    sel = blowup.tau < 1e-3
    np.testing.assert_allclose(law[sel], 2.0, rtol=0.02)


def test_window_under_resolved(blowup):
    with pytest.raises(JangSolverError):
        verify_blowup_rate(blowup, window=(1e-3, 1.001e-3))


# auxiliary equation ------------------------------------------------------

def test_auxiliary_flat_zero():
    sol = solve_auxiliary(flat(1.0), 1e-2, f_inner=0.0, r_in=1.5)
    assert sol.domain == "single"
    assert np.max(np.abs(sol.f)) == 0.0


def test_auxiliary_sup_bounded(aux_path):
    delta = 2 / (3 * math.sqrt(3))  # H of the inner boundary sphere r = 3
    for sol in aux_path[:3]:
        assert sol.f_inner == pytest.approx(delta / (2 * sol.t), rel=1e-12)
        assert sol.sup_tf <= delta
    sups = [s.sup_tf for s in aux_path]
    assert max(sups) / min(sups) < 1.01


def test_auxiliary_converges_to_blowup(aux_path, blowup):
    r = np.linspace(3.0, 10.0, 29)
    errs = [np.max(np.abs(s.height(r) - blowup.height(r))) for s in aux_path]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3


def test_auxiliary_residual_independent_check(aux_path):
    data = schwarzschild(1.0)
    for sol in aux_path:
        r = np.linspace(3.0, 50.0, 40)
        f, fp, fpp = sol.outer_derivatives(r)
        J = jang_operator(data, r, fp, fpp)
        assert np.max(np.abs(J - sol.t * f)) < 1e-8


def test_auxiliary_mirrored_domain_reaches_inner_sheet(aux_path):
    sol = aux_path[-1]
    assert sol.domain == "mirrored"
    assert sol.rho[0] < 0 and np.any(sol.sheet == -1)
    assert sol.f[0] == pytest.approx(sol.f_inner, rel=1e-12)


def test_auxiliary_rejects_bad_t():
    with pytest.raises(DataError):
        solve_auxiliary(schwarzschild(1.0), 0.0)
