import math

import numpy as np
import pytest

from motslab.jang_radial import JangSolverError, solve_blowup
from motslab.radial_data import DataError, custom, flat, schwarzschild
from motslab.slice_geometry import (
    SLICE_COLUMNS, dominant_energy_margins, identity_terms, induced_metric,
    mean_curvature_and_q, q_from_definition, sample_slice, scalar_curvature,
    scalar_identity_residual,
)

R = np.geomspace(2.01, 50.0, 60)


def gbar_closed(r):
    return r**5 / ((r - 2) * (r**4 - 16))


def hbar_closed(r):
    return 2 * np.sqrt((r - 2) * (r**4 - 16) / r**7)


def q_closed(r):
    return -32 / np.sqrt(r**7 * (r**3 + 2 * r**2 + 4 * r + 8))


@pytest.fixture(scope="module")
def sol():
    return solve_blowup(schwarzschild(1.0))


@pytest.fixture(scope="module")
def charged():
    # regular metric, k with both components; mu and J(omega) do not vanish
    data = custom("sqrt(1 + 1/r)", "2/r^4", "-16/r^4", r_min=0.5)
    return data, solve_blowup(data)


def test_induced_metric_closed_form(sol):
    np.testing.assert_allclose(induced_metric(sol.data, sol, R), gbar_closed(R), rtol=1e-10)


def test_induced_metric_split_form(sol):
    # r/(r-2) + 16 r/((r-2)(r^4-16)) is the same rational function
    split = R / (R - 2) + 16 * R / ((R - 2) * (R**4 - 16))
    np.testing.assert_allclose(np.sqrt(induced_metric(sol.data, sol, R)), np.sqrt(split), rtol=1e-10)


def test_induced_metric_stretches(charged):
    data, s = charged
    r = np.geomspace(s.r_h * 1.01, 50, 30)
    assert np.all(induced_metric(data, s, r) >= data.F(r) ** 2)


def test_flat_horizontal_graph():
    data = flat()
    assert induced_metric(data, None, 3.0) == 1.0
    Hbar, q = mean_curvature_and_q(data, None, 3.0)
    assert Hbar == pytest.approx(2 / 3, rel=1e-15)
    assert q == 0.0
    res, Rbar = scalar_identity_residual(data, None, np.array([2.0, 3.0, 5.0]))
    assert np.max(np.abs(Rbar)) < 1e-12
    assert np.max(np.abs(res)) < 1e-12


def test_mean_curvature_closed_form(sol):
    Hbar, q = mean_curvature_and_q(sol.data, sol, R)
    np.testing.assert_allclose(Hbar, hbar_closed(R), rtol=1e-8)
    np.testing.assert_allclose(q, q_closed(R), rtol=1e-8)


def test_q_limit_at_horizon(sol):
    Hbar, q = mean_curvature_and_q(sol.data, sol, 2 + 1e-9)
    assert q == pytest.approx(-0.5, abs=1e-6)
    assert Hbar < 1e-3
    assert q_closed(2 + 1e-12) == pytest.approx(-0.5, abs=1e-9)


def test_q_two_routes_agree(sol, charged):
    np.testing.assert_allclose(q_from_definition(sol.data, sol, R),
                               mean_curvature_and_q(sol.data, sol, R)[1], atol=1e-12)
    data, s = charged
    r = np.geomspace(s.r_h * 1.001, 50, 30)
    np.testing.assert_allclose(q_from_definition(data, s, r), mean_curvature_and_q(data, s, r)[1],
                               atol=1e-12)


def test_q_norm_is_radial_component(sol):
    t = identity_terms(sol.data, sol, R)
    np.testing.assert_allclose(np.sqrt(t["q2"]), np.abs(q_closed(R)), rtol=1e-8)


def test_identity_schwarzschild(sol):
    res, Rbar = scalar_identity_residual(sol.data, sol, R)
    assert np.all(np.abs(res) <= 1e-6 * (1 + np.abs(Rbar)))
    t = identity_terms(sol.data, sol, R)
    assert np.max(np.abs(t["mu16"])) < 1e-12
    assert np.max(np.abs(t["J16"])) == 0.0


def test_identity_with_matter_terms(charged):
    data, s = charged
    r = np.geomspace(s.r_h * 1.005, 50, 60)
    res, Rbar = scalar_identity_residual(data, s, r)
    t = identity_terms(data, s, r)
    assert np.max(np.abs(t["J16"])) > 0.1 and np.max(np.abs(t["mu16"])) > 0.1
    assert np.all(np.abs(res) <= 1e-6 * (1 + np.abs(Rbar)))


def test_scalar_curvature_closed_form(sol):
    # 1/ḡ_rr = 1 - 2/r - 16/r^4 + 32/r^5, so R̄ = (256 - 96 r)/r^7 exactly
    np.testing.assert_allclose(scalar_curvature(sol.data, sol, R), (256 - 96 * R) / R**7,
                               rtol=1e-7, atol=1e-9)


def test_dominant_energy_forms(sol):
    minus, plus = dominant_energy_margins(sol.data, sol, R)
    assert np.all(plus >= -1e-8)
    # the opposite sign of div q has no sign on this slice
    assert np.min(minus) < 0


def test_area_and_stability_product(sol):
    rows = sample_slice(sol.data, sol, [2.5, 3.0])
    assert rows[0].area == 4 * math.pi * 2.5**2
    assert sol.lam * 4 * math.pi * sol.r_h**2 == pytest.approx(4 * math.pi, rel=1e-5)


def test_sample_rows(sol):
    rows = sample_slice(sol.data, sol, R[:5])
    assert len(rows[0].row()) == len(SLICE_COLUMNS)
    assert rows[0].gbar_rr == pytest.approx(gbar_closed(R[0]), rel=1e-10)


def test_radius_inside_horizon_rejected(sol):
    with pytest.raises(DataError):
        induced_metric(sol.data, sol, 1.5)
    with pytest.raises(JangSolverError):
        scalar_curvature(custom("1", "0", "-16/r^4", r_min=0.5), sol, 2.0)
