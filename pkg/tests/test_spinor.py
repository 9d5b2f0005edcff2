import math

import mpmath
import numpy as np
import pytest

from motslab.jang_radial import solve_blowup
from motslab.radial_data import DataError, custom, flat, schwarzschild
from motslab.spinor import (
    PAULI, SPINOR_COLUMNS, SpinorError, boundary_dirac_eigenvalue, dirichlet_energy,
    extrapolate_limit, frame_check, full_spinor_energy, h_profile,
)

# limits for Schwarzschild m = 1 (volume weight, r_lo -> 2)
DIRICHLET = 0.6795318
FULL = 1.0192978


def mp_h(r):
    with mpmath.workdps(30):
        F = lambda x: mpmath.sqrt(x**5 / ((x - 2) * (x**4 - 16)))
        return float(mpmath.exp(-mpmath.quad(lambda x: (F(x) - 1) / x, [r, 10, 100, mpmath.inf])))


@pytest.fixture(scope="module")
def sol():
    return solve_blowup(schwarzschild(1.0))


@pytest.fixture(scope="module")
def profile(sol):
    return h_profile(sol.data, sol)


def test_h_matches_mpmath_quadrature(profile):
    for r in (2.01, 2.5, 4.0, 20.0, 1e3):
        assert profile.h_at(r)[0] == pytest.approx(mp_h(r), rel=1e-10)


def test_h_normalized_at_infinity_and_monotone(profile):
    assert profile.h[-1] == pytest.approx(1.0, abs=1e-7)
    assert np.all(np.diff(profile.h) > 0)


def test_h_vanishes_like_square_root_at_horizon(profile):
    ratios = [profile.h_at(2 + d)[0] / math.sqrt(d) for d in (1e-4, 1e-6, 1e-7)]
    assert ratios[2] == pytest.approx(ratios[1], rel=1e-5)
    assert ratios[1] == pytest.approx(ratios[0], rel=1e-3)


def test_ode_residual(profile):
    assert profile.ode_residual() < 1e-8


def test_profile_stays_inside_the_blowup_solution():
    # non-time-symmetric data: the blowup solution starts well above 1e-8 r_h
    data = custom("sqrt(1 + 1/r)", "2/r^4", "-16/r^4", r_min=0.5)
    s = solve_blowup(data)
    p = h_profile(data, s)
    assert p.r[0] - s.r_h >= s.inner_offset
    assert p.ode_residual() < 1e-8


def test_dirichlet_limit(profile):
    res = dirichlet_energy(profile)
    assert res.limit == pytest.approx(DIRICHLET, abs=1e-6)
    assert abs(res.limit - 0.6795) <= 1e-3
    # decreasing in r_lo, with a linear approach (constant integrand at the horizon)
    assert res.values[0] < res.values[1] < res.values[2] < res.limit
    assert res.order == pytest.approx(1.0, abs=1e-3)


def test_sqrt_weight_limit(profile):
    res = dirichlet_energy(profile, weight="sqrt")
    assert res.limit == pytest.approx(1.27135, abs=1e-4)
    assert res.order == pytest.approx(0.5, abs=1e-3)


def test_full_energy_limit_and_dominance(profile, sol):
    full = full_spinor_energy(profile, sol.data, sol)
    assert full.limit == pytest.approx(FULL, abs=1e-6)
    assert abs(full.limit - 1.0193) <= 5e-3
    for r_lo in (2.001, 2.1, 3.0):
        assert full_spinor_energy(profile, sol.data, sol, r_lo=r_lo) >= dirichlet_energy(profile, r_lo=r_lo)


def test_energy_scales_with_mass():
    s2 = solve_blowup(schwarzschild(2.0))
    p2 = h_profile(s2.data, s2)
    assert dirichlet_energy(p2).limit == pytest.approx(2 * DIRICHLET, rel=1e-5)


def test_flat_space_is_trivial():
    p = h_profile(flat(), None)
    assert np.all(p.h == 1.0)
    assert dirichlet_energy(p, r_lo=1.5) == 0.0


def test_pauli_clifford_relations():
    I = np.eye(2)
    for i, a in enumerate(PAULI):
        for j, b in enumerate(PAULI):
            assert np.allclose(a @ b + b @ a, -2 * I * (i == j))


@pytest.mark.parametrize("r", [2 + 1e-6, 2.001, 3.0, 12.0])
@pytest.mark.parametrize("c", [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8j)])
def test_spinor_is_harmonic_and_density_matches(profile, r, c):
    for theta, phi in ((0.3, 0.0), (1.2, 2.5), (2.9, 5.0)):
        residual, density, expected = frame_check(profile, r, theta, phi, *c)
        assert residual < 1e-8
        assert density == pytest.approx(expected, rel=1e-10)


def test_boundary_eigenvalue():
    assert boundary_dirac_eigenvalue(2.5) == -0.4
    # equality case of 2 sqrt(π/|S|) for the round sphere
    assert -boundary_dirac_eigenvalue(2.5) == pytest.approx(2 * math.sqrt(math.pi / (4 * math.pi * 2.5**2)))
    with pytest.raises(DataError):
        boundary_dirac_eigenvalue(0.0)


def test_extrapolation_on_model():
    offs = (1e-4, 1e-5, 1e-6)
    vals = [3.0 - 7 * d**0.5 for d in offs]
    limit, order = extrapolate_limit(vals, offs)
    assert limit == pytest.approx(3.0, abs=1e-12)
    assert order == pytest.approx(0.5)


def test_rows_and_errors(profile, sol):
    rows = profile.rows()
    assert rows.shape[1] == len(SPINOR_COLUMNS)
    assert np.allclose(rows[:, 4], 1.5 * rows[:, 3])
    with pytest.raises(SpinorError):
        profile.h_at(1.9)
    with pytest.raises(DataError):
        dirichlet_energy(profile, weight="bogus")
