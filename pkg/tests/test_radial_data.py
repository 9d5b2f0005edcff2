import math

import numpy as np
import pytest

from motslab.radial_data import (
    DataError, NoMOTSError, adm_mass, custom, find_mots, flat, from_config,
    schwarzschild, sphere_geometry, theta_plus,
)


def test_schwarzschild_profile():
    data = schwarzschild(1.0)
    assert data.F(4.0) ** 2 == pytest.approx(2.0, rel=1e-15)
    assert data.r_min == 2.0
    assert data.is_time_symmetric


@pytest.mark.parametrize("m", [0.0, -1.0, float("nan")])
def test_schwarzschild_rejects_bad_mass(m):
    with pytest.raises(DataError):
        schwarzschild(m)


def test_flat_sphere_geometry():
    g = sphere_geometry(flat(), 3.0)
    assert g.theta_plus == pytest.approx(2 / 3, rel=1e-15)
    assert g.theta_minus == pytest.approx(-2 / 3, rel=1e-15)
    assert g.area == pytest.approx(36 * math.pi)


def test_schwarzschild_mean_curvature_at_4():
    g = sphere_geometry(schwarzschild(1.0), 4.0)
    assert g.H == pytest.approx(0.5 * math.sqrt(0.5), rel=1e-14)


def test_mean_curvature_is_first_variation_of_area():
    # d|S_r|/d(proper distance) = H |S_r|, with d(proper distance) = F dr.
    data = schwarzschild(1.0)
    r, h = 4.0, 1e-5
    dA = (4 * math.pi * (r + h) ** 2 - 4 * math.pi * (r - h) ** 2) / (2 * h)
    g = sphere_geometry(data, r)
    assert dA / data.F(r) == pytest.approx(g.H * g.area, rel=1e-9)


def test_expansion_identities_on_grid():
    data = custom("sqrt(1 + 1/r^2)", "0.3/r^3", "-0.2/r^2", r_min=0.5)
    r = np.geomspace(0.6, 100, 200)
    g = sphere_geometry(data, r)
    np.testing.assert_allclose(g.theta_plus + g.theta_minus, 2 * (g.trk - g.k_nn), atol=1e-12)
    np.testing.assert_allclose(g.theta_plus - g.theta_minus, 2 * g.H, atol=1e-12)


def test_time_symmetric_expansions():
    g = sphere_geometry(schwarzschild(1.0), np.linspace(2.1, 10, 50))
    np.testing.assert_array_equal(g.theta_plus, -g.theta_minus)
    np.testing.assert_array_equal(g.theta_plus, g.H)
    assert np.all(np.diff(g.area) > 0)
    assert np.all(g.H > 0)


def test_geometry_rejects_radius_at_r_min():
    with pytest.raises(DataError):
        sphere_geometry(schwarzschild(1.0), 2.0)


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 5.0])
def test_find_mots_schwarzschild(m):
    assert find_mots(schwarzschild(m)) == pytest.approx(2 * m, rel=1e-10)


def test_find_mots_flat_raises():
    with pytest.raises(NoMOTSError):
        find_mots(flat())


def test_find_mots_interior_sign_change():
    # theta^+ = k_tan + 2/r with k_tan = -1 vanishes at r = 2, away from r_min.
    data = custom("1", "0", "-1", r_min=1.0)
    with pytest.raises(NoMOTSError):
        find_mots(data)  # theta^+ < 0 at infinity: not outer untrapped
    data = custom("1", "0", "-2/r^2", r_min=0.5)
    assert find_mots(data) == pytest.approx(1.0, rel=1e-15)
    assert theta_plus(data, 1.5) > 0


def test_adm_mass():
    assert adm_mass(schwarzschild(1.0)).mass == pytest.approx(1.0, abs=1e-8)
    assert adm_mass(schwarzschild(3.0)).mass == pytest.approx(3.0, abs=1e-8)
    assert adm_mass(flat()).mass == pytest.approx(0.0, abs=1e-8)
    perturbed = custom("sqrt((1 + r^(-3))/(1 - 2/r))", r_min=2.0)
    assert adm_mass(perturbed).mass == pytest.approx(1.0, abs=1e-3)


def test_adm_mass_rejects_slow_falloff():
    with pytest.raises(DataError, match="not asymptotically Schwarzschildian"):
        adm_mass(custom("1 + 1/sqrt(r)", r_min=1.0))


def test_from_config():
    assert from_config({"family": "schwarzschild", "mass": 1.0}).r_min == 2.0
    data = from_config({"family": "custom", "F": "sqrt(r^5/((r-2)*(r^4-16)))", "k_nn": "0",
                        "k_tan": "0", "r_min": 2.0})
    assert data.F(3.0) == pytest.approx(math.sqrt(243 / 65))
    with pytest.raises(DataError, match="unknown key"):
        from_config({"family": "schwarzschild", "mas": 1.0})
    with pytest.raises(DataError):
        from_config({"family": "schwarzschild", "mass": -1.0})


def test_slow_trace_decay_warns():
    with pytest.warns(UserWarning, match="decays no faster"):
        from_config({"family": "custom", "F": "1", "k_nn": "1/r", "k_tan": "0", "r_min": 1.0})
