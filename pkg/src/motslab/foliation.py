r"""Horizon charts: geodesic distance, the principal eigenvalue and (lambda, Lambda).

In spherical symmetry the principal eigenfunction of the MOTS stability
operator on a round MOTS is constant, so the eigenfunction-lapse foliation
(B, lapse beta = 1) coincides with the geodesic foliation (A): the flow
parameter s equals the geodesic distance tau to the horizon, and the
principal eigenvalue reduces to lambda = d theta^+/d tau at tau = 0.

Near-horizon integrals use u = sqrt(r - r_h), in which the integrand
2 u F(r_h + u^2) of tau stays bounded even when F has an inverse square-root
pole at r_h.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .radial_data import NoMOTSError, find_mots, theta_plus


__all__ = [
    "FoliationChart",
    "NotStrictlyStableError",
    "ChartError",
    "representable_point",
    "pole_exponent",
    "radial_jacobian",
    "smooth_F",
    "smooth_profile",
    "geodesic_distance",
    "principal_eigenvalue",
    "expansion_bounds",
    "build_chart",
]


class NotStrictlyStableError(RuntimeError):
    """The principal eigenvalue of the MOTS is not positive."""


class ChartError(ValueError):
    """Requested point outside the chart or bound search failed."""


def representable_point(r_h, u):
    """(r, delta) with r = fl(r_h + u^2) and delta = r - r_h computed exactly."""
    u = np.asarray(u, dtype=float)
    r = r_h + u * u
    r = np.where(r > r_h, r, np.nextafter(r_h, np.inf))
    return r, r - r_h


def pole_exponent(data, r_h):
    """kappa with F ~ (r - r_h)^(-kappa) at the horizon (0 for regular F)."""
    d1, d2 = 1e-8 * r_h, 1e-10 * r_h
    kappa = -math.log(float(data.F(r_h + d2)) / float(data.F(r_h + d1))) / math.log(d2 / d1)
    # snap to the nearest half-integer; a pole just inside r_h (regular F at
    # r_h) shows up as a small spurious exponent
    if abs(2 * kappa - round(2 * kappa)) < 2e-2:
        kappa = round(2 * kappa) / 2
    return min(max(kappa, 0.0), 1.0)


def radial_jacobian(r_h, u, kappa):
    """(r, dr/du) at the representable radius nearest r_h + u^2.

    dr/du = 2u is rescaled by (delta/u^2)^kappa: for F ~ delta^(-kappa) the
    product F(r) dr/du is then evaluated consistently at the representable
    point, so the rounding of r_h + u^2 does not leak into integrals.
    """
    r, delta = representable_point(r_h, u)
    u = np.asarray(u, dtype=float)
    return r, 2.0 * u * (delta / (u * u)) ** kappa


def smooth_F(data, r_h, u, kappa):
    """(r~, F) with F continued smoothly from r~ = fl(r_h + u^2) to r_h + u^2.

    r~ is piecewise constant in u, so F(r~) has rounding steps of relative
    size eps r_h/delta, which stall adaptive integrators near the horizon.
    For a pole F ~ delta^(-kappa) the continuation is F(r~) (delta~/u^2)^kappa;
    for regular F it is the first-order Taylor step F(r~) + F'(r~)(u^2 - delta~).
    """
    r, delta = representable_point(r_h, u)
    u = np.asarray(u, dtype=float)
    if kappa > 0:
        return r, data.F(r) * (delta / (u * u)) ** kappa
    return r, data.F(r) + data.dF(r) * (u * u - delta)


def smooth_profile(expr, dexpr, r_h, r, u):
    """expr continued from r~ to r_h + u^2 by a first-order Taylor step."""
    return expr(r) + dexpr(r) * (np.asarray(u, dtype=float) ** 2 - (r - r_h))


def _tau_integrand(data, r_h, u, kappa):
    _, F = smooth_F(data, r_h, u, kappa)
    return 2.0 * np.asarray(u, dtype=float) * F


def _finite_distance_exponent(data, r_h):
    """Pole exponent of F at r_h, rejecting horizons at infinite distance."""
    kappa = pole_exponent(data, r_h)
    if kappa >= 1:
        raise ChartError(f"F ~ (r - r_h)^-{kappa:g} is not integrable at r_h = {r_h!r}: "
                         "the horizon lies at infinite geodesic distance")
    return kappa


def geodesic_distance(data, r, r_h=None):
    """tau(r) = int_{r_h}^r F by adaptive quadrature in u = sqrt(rho - r_h)."""
    if r_h is None:
        r_h = find_mots(data)
    if r < r_h:
        raise ChartError(f"radius {r!r} below the horizon radius {r_h!r}")
    if r == r_h:
        return 0.0
    u_max = math.sqrt(r - r_h)
    kappa = _finite_distance_exponent(data, r_h)
    value, _ = quad(lambda u: float(_tau_integrand(data, r_h, u, kappa)), 0.0, u_max,
                    epsabs=0.0, epsrel=1e-13, limit=200)
    return value


@dataclass(frozen=True)
class FoliationChart:
    """Near-horizon parametrization s(r) with the constants (lambda, Lambda).

    ``kind`` is "A" (geodesic) or "B" (eigenfunction lapse); they coincide in
    spherical symmetry because beta = 1. The map s(r) is tabulated by a
    dense ODE solution in u = sqrt(r - r_h) covering r up to ``r_outer``.
    """

    data: object
    r_h: float
    lam: float
    Lambda: float
    s_max: float
    r_outer: float
    kind: str = "B"
    _ode: object = field(repr=False, compare=False, default=None)
    kappa: float = 0.0

    beta = 1.0

    @staticmethod
    def build(data, r_h, lam, Lambda=float("nan"), s_max=None, r_outer=None, kind="B"):
        if kind not in ("A", "B"):
            raise ChartError(f"unknown chart kind {kind!r}")
        r_outer = 1e4 * r_h if r_outer is None else float(r_outer)
        s_max = 0.05 * r_h if s_max is None else float(s_max)
        u_max = math.sqrt(r_outer - r_h)
        kappa = _finite_distance_exponent(data, r_h)
        u0 = math.sqrt(1e-15 * r_h)
        g0 = float(_tau_integrand(data, r_h, u0, kappa))
        g1 = float(_tau_integrand(data, r_h, 0.5 * u0, kappa))
        p = math.log2(g0 / g1) if g0 > 0 and g1 > 0 else 0.0
        tau0 = g0 * u0 / (p + 1.0)
        ode = solve_ivp(lambda u, y: _tau_integrand(data, r_h, u, kappa), (u0, u_max), [tau0],
                        method="DOP853", rtol=1e-13, atol=1e-300, dense_output=True)
        if not ode.success:
            raise ChartError(f"chart integration failed: {ode.message}")
        return FoliationChart(data, float(r_h), float(lam), float(Lambda), s_max, r_outer, kind,
                              ode, kappa)

    @property
    def u_min(self):
        return self._ode.t[0]

    def with_Lambda(self, Lambda):
        return FoliationChart(self.data, self.r_h, self.lam, float(Lambda), self.s_max,
                              self.r_outer, self.kind, self._ode, self.kappa)

    def s_of_u(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < self._ode.t[0]) or np.any(u > self._ode.t[-1]):
            raise ChartError("point outside the chart")
        return self._ode.sol(u)[0]

    def s_of_r(self, r):
        """Flow parameter s (= tau) at radius r (vectorized)."""
        r = np.asarray(r, dtype=float)
        return self.s_of_u(np.sqrt(r - self.r_h))

    def ds_dr(self, r):
        return self.data.F(r)

    def points_at(self, s):
        """Representable radii near the requested s values.

        Returns (r, s_actual): r is a double, s_actual = s(r) exactly as
        tabulated, which differs from the request only by rounding of r.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = self._ode.t
        y = self._ode.y[0]
        u = np.exp(np.interp(np.log(s), np.log(y), np.log(t)))
        for _ in range(8):
            u = np.clip(u, t[0], t[-1])
            u = u - (self.s_of_u(u) - s) / _tau_integrand(self.data, self.r_h, u, self.kappa)
        u = np.clip(u, t[0], t[-1])
        r, _ = representable_point(self.r_h, u)
        return r, self.s_of_r(r)

    def to_dict(self):
        return {"kind": self.kind, "r_h": self.r_h, "lambda": self.lam, "Lambda": self.Lambda,
                "beta": self.beta, "s_max": self.s_max}


def principal_eigenvalue(data, r_h=None):
    """lambda = d theta^+/d tau at the MOTS, by Richardson extrapolation.

    theta^+(tau)/tau is sampled at tau = h, h/2, h/4 with h = 1e-3 r_h and
    extrapolated eliminating the O(tau) and O(tau^2) terms.
    """
    if r_h is None:
        r_h = find_mots(data)
    h = 1e-3 * r_h
    taus = [h, h / 2, h / 4]
    q = []
    for tau in taus:
        r = _radius_at_distance(data, r_h, tau)
        q.append(float(theta_plus(data, r)) / geodesic_distance(data, r, r_h))
    r1 = 2 * q[1] - q[0]
    r2 = 2 * q[2] - q[1]
    lam = (4 * r2 - r1) / 3
    if not lam > 0:
        raise NotStrictlyStableError(f"MOTS at r = {r_h!r} is not strictly stable (lambda = {lam!r})")
    return lam


def _radius_at_distance(data, r_h, tau):
    hi = r_h + tau
    while geodesic_distance(data, hi, r_h) < tau:
        hi = r_h + 2 * (hi - r_h)
    return brentq(lambda r: geodesic_distance(data, r, r_h) - tau,
                  np.nextafter(r_h, np.inf), hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)


def expansion_bounds(data, s_max, chart=None, n=10_000, cap=1e8, s_min_ratio=1e-6):
    """(lambda, Lambda) with lambda s - Lambda s^2 <= theta^+ <= lambda s + Lambda s^2.

    Lambda is the sup of |theta^+ - lambda s|/s^2 over a log grid on
    [s_min_ratio s_max, s_max], enlarged by 1%; the bound is then re-verified.
    """
    if chart is None:
        chart = build_chart(data, s_max=s_max)
    lam = chart.lam
    r, s = chart.points_at(np.geomspace(s_min_ratio * s_max, s_max, n))
    th = theta_plus(data, r)
    Lambda = 1.01 * float(np.max(np.abs(th - lam * s) / s**2))
    if not Lambda <= cap / chart.r_h**3:
        raise ChartError("expansion bound fails up to the cap; shrink s_max")
    ok = (lam * s - Lambda * s**2 <= th) & (th <= lam * s + Lambda * s**2)
    if not np.all(ok):
        raise ChartError("expansion bound not satisfied on the grid")
    return lam, Lambda


def build_chart(data, s_max=None, r_outer=None, kind="B"):
    """Find the MOTS, lambda and Lambda and return the foliation chart."""
    r_h = find_mots(data)
    lam = principal_eigenvalue(data, r_h)
    chart = FoliationChart.build(data, r_h, lam, s_max=s_max, r_outer=r_outer, kind=kind)
    _, Lambda = expansion_bounds(data, chart.s_max, chart)
    return chart.with_Lambda(Lambda)


__all__ += ["NoMOTSError"]
