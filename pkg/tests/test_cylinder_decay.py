import math

import numpy as np
import pytest

from motslab.cylinder_decay import (
    DecayError, cylinder_rows, fit_decay_constants, foliation_C, gradient_bounds_check, to_cylinder,
)
from motslab.jang_radial import solve_blowup
from motslab.radial_data import schwarzschild


@pytest.fixture(scope="module", params=[0.5, 1.0, 2.0])
def sol(request):
    return solve_blowup(schwarzschild(request.param))


@pytest.fixture(scope="module")
def sol1():
    return solve_blowup(schwarzschild(1.0))


def test_reciprocal_rule(sol1):
    cg = to_cylinder(sol1)
    F = sol1.data.F(cg.r)
    fs = sol1.slope(cg.r) / F
    np.testing.assert_allclose(cg.du * fs, 1.0, rtol=1e-10)
    assert np.all(cg.du < 0) and np.all(np.diff(cg.u) < 0)


def test_second_derivative_by_differences(sol1):
    cg = to_cylinder(sol1)
    i = slice(100, -100, 50)
    dz = np.gradient(cg.du, cg.z)
    np.testing.assert_allclose(cg.d2u[i], dz[i], rtol=1e-3)


def test_rate_is_sqrt_lambda(sol):
    c = fit_decay_constants(to_cylinder(sol))
    assert c.rate == pytest.approx(math.sqrt(sol.lam), rel=0.01)
    assert not c.flagged


def test_decay_u_tracks_exponential(sol1):
    # u = tau and f = -2 ln tau + c0, so u e^{z/2} is constant up to O(tau)
    cg = to_cylinder(sol1)
    c = fit_decay_constants(cg)
    assert c.rate == pytest.approx(0.5, abs=0.005)
    sel = cg.z >= c.window[0]
    w = cg.u[sel] * np.exp(0.5 * cg.z[sel])
    assert np.ptp(w[-200:]) / w[-1] < 1e-6


def test_constants_ordering_and_envelope(sol):
    cg = to_cylinder(sol)
    c = fit_decay_constants(cg)
    assert c.C2 <= c.C1 and c.C3 <= c.C1 and c.C2 <= c.C1_pure <= c.C1
    sel = (cg.z >= c.window[0]) & (cg.z <= c.window[1])
    e = np.exp(-math.sqrt(sol.lam) * cg.z[sel])
    assert np.all(c.C2 * e <= cg.u[sel] * (1 + 1e-12))
    assert np.all(cg.u[sel] <= c.C1 * e)
    assert np.all(c.C3 * e <= np.abs(cg.du[sel]) * (1 + 1e-12))


def test_constants_stable_under_shifted_start(sol1):
    cg = to_cylinder(sol1)
    base = fit_decay_constants(cg)
    # the grid covers ~5.4 decades of s, so the doubled start fits 3 decades
    moved = fit_decay_constants(cg, z_bar=2 * cg.z_bar, decades=3.0)
    for a, b in [(base.C1, moved.C1), (base.C2, moved.C2), (base.C3, moved.C3)]:
        assert abs(b / a - 1) < 0.02


def test_window_under_resolved(sol1):
    cg = to_cylinder(sol1)
    with pytest.raises(DecayError):
        fit_decay_constants(cg, z_bar=2 * cg.z_bar)


def test_gradient_bounds(sol):
    c = fit_decay_constants(to_cylinder(sol))
    rep = gradient_bounds_check(sol, c)
    assert rep.holds
    assert rep.lower_margin > 0 and rep.upper_margin > 0
    assert rep.s_limit == pytest.approx(1 / math.sqrt(sol.lam), rel=0.02)
    assert rep.tangential_bound > 0


def test_gradient_bounds_violation_reported(sol1):
    c = fit_decay_constants(to_cylinder(sol1))
    # C3 = C1 forces s |∂_s f| <= 1 < 1/√λ = 2
    tight = type(c)(c.rate, c.expected_rate, c.C1, c.C1_pure, c.C2, c.C1, c.window, c.n)
    with pytest.raises(DecayError):
        gradient_bounds_check(sol1, tight)
    assert not gradient_bounds_check(sol1, tight, strict=False).holds


def test_foliation_C(sol1):
    fc = foliation_C(sol1)
    assert 1 <= fc.alpha1 < 10 and 1 <= fc.alpha2 < 10
    r = np.geomspace(2 + 1e-10, 2.5, 50)
    assert np.all(np.diff(fc.gamma_of_r(r)) > 0)
    for g in [1e-4, 1e-3, 1e-2]:
        u = fc.u_of_gamma(g)
        assert float(sol1.height_at_u(u)) + math.log(g) / fc.root == pytest.approx(0, abs=1e-10)
        assert fc.r_of_gamma(g) == sol1.r_h + u * u


def test_cylinder_rows(sol1):
    cg = to_cylinder(sol1)
    c = fit_decay_constants(cg)
    rows = cylinder_rows(cg, c)
    assert rows.shape[1] == 6
    assert np.all(rows[:, 4] >= -1e-12) and np.all(rows[:, 5] >= 0)
