r"""The radial Jang operator and its solvers.

For a radial graph f(r) over g = F^2 dr^2 + r^2 dOmega^2, with
W^2 = 1 + f'^2/F^2,

    H[f] = [ (f'' - (F'/F) f')/(F^2 + f'^2) + 2 f'/(r F^2) ] / W,
    P[f] = k_nn/W^2 + k_tan,
    J[f] = H[f] - P[f].

J is invariant under f -> f + c, so J = 0 is first order in the slope. The
blowup solver integrates it in the bounded variable

    w = 1 + v,   v = f_s/sqrt(1 + f_s^2) in (-1, 0),   f_s = f'/F,

for which J = 0 reads dv/dr = F (k_nn (1 - v^2) + k_tan) - 2 v/r. The
blowup solution is the unique one with v = -1 (w = 0) on the MOTS, so it is
integrated outward from the horizon in u = sqrt(r - r_h); no shooting
parameter is needed and w keeps full relative precision where f' ~ -1/tau.
An independent inward shooting from the far-field series (``detect_horizon``)
locates the radius where f' blows up.

The auxiliary equation J[f_t] = t f_t is solved as a boundary value problem
for the profile curve (tau(sigma), z(sigma)) of the graph parametrized by
arc length, which stays well conditioned along the long near-vertical
stretch of the graph as t -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import solve_bvp, solve_ivp
from scipy.optimize import brentq

from .foliation import (
    FoliationChart, pole_exponent, principal_eigenvalue, representable_point, smooth_F,
    smooth_profile,
)
from .radial_data import DataError, NoMOTSError, find_mots, theta_plus


__all__ = [
    "JangSolverError",
    "RadialJangSolution",
    "jang_operator",
    "mean_curvature_operator",
    "jang_second_derivative",
    "local_operator",
    "schwarzschild_slope",
    "schwarzschild_slope_derivative",
    "solve_blowup",
    "detect_horizon",
    "verify_blowup_rate",
    "BlowupRate",
    "AuxiliarySolution",
    "solve_auxiliary",
    "auxiliary_continuation",
]


class JangSolverError(RuntimeError):
    """Solver failure: divergent far field, non-monotone solution, stagnation."""


# ---------------------------------------------------------------------------
# Operators


def mean_curvature_operator(data, r, fp, fpp):
    """(H[f], P[f]) for the radial graph with slope fp and second derivative fpp."""
    r = data.check_radius(r)
    F = data.F(r)
    dF = data.dF(r)
    W = np.sqrt(1.0 + (fp / F) ** 2)
    H = ((fpp - dF / F * fp) / (F**2 + fp**2) + 2.0 * fp / (r * F**2)) / W
    P = data.k_nn(r) / W**2 + data.k_tan(r)
    return H, P


def jang_operator(data, r, fp, fpp):
    """Residual J = H[f] - P[f]; it depends on (fp, fpp) only, never on f."""
    H, P = mean_curvature_operator(data, r, fp, fpp)
    return H - P


def jang_second_derivative(data, r, fp):
    """f'' solving J = 0 for given r and f'."""
    r = data.check_radius(r)
    F = data.F(r)
    W = np.sqrt(1.0 + (fp / F) ** 2)
    P = data.k_nn(r) / W**2 + data.k_tan(r)
    return data.dF(r) / F * fp + (F**2 + fp**2) * (W * P - 2.0 * fp / (r * F**2))


def local_operator(theta_plus, k_nn, P, dphi, ddphi, beta=1.0):
    """Jang's operator on a test function phi(s) in a foliation with lapse beta.

    ``P`` is the leaf trace tr k - k(nu, nu) (= k_tan in the radial class); ``dphi``, ``ddphi`` are s-derivatives.
    """
    q = 1.0 + (dphi / beta) ** 2
    v = dphi / (beta * np.sqrt(q))
    return v * theta_plus - (1.0 + v) * P - k_nn / q + ddphi / (beta**2 * q**1.5)


# ---------------------------------------------------------------------------
# Closed form on the Schwarzschild slice


def _slope_q(x):
    # 16 x/((x - 2)(x^4 - 16)) with x^4 - 16 factored to avoid cancellation.
    return 16.0 * x / ((x - 2.0) ** 2 * (x + 2.0) * (x * x + 4.0))


def schwarzschild_slope(m, r):
    """f0'(r) = -sqrt(16 r/((r-2)(r^4-16))) for m = 1, scaled as f -> m f(r/m)."""
    r = np.asarray(r, dtype=float)
    if not m > 0:
        raise DataError("mass must be positive")
    if np.any(r <= 2 * m):
        raise DataError("closed-form slope requires r > 2m")
    x = r / m
    value = -np.sqrt(_slope_q(x))
    return float(value) if value.ndim == 0 else value


def schwarzschild_slope_derivative(m, r):
    """Exact f0''(r) of the closed form."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 2 * m):
        raise DataError("closed-form slope requires r > 2m")
    x = r / m
    dlogq = 1.0 / x - 2.0 / (x - 2.0) - 1.0 / (x + 2.0) - 2.0 * x / (x * x + 4.0)
    value = -0.5 * np.sqrt(_slope_q(x)) * dlogq / m
    return float(value) if value.ndim == 0 else value


# ---------------------------------------------------------------------------
# Blowup solution


@dataclass(frozen=True)
class RadialJangSolution:
    """Blowup solution f0 sampled on a grid log-spaced toward r_h.

    Columns: r, f, fp (= f'), fpp (= f''), tau (= s), w (= 1 + f_s/W).
    Normalization "decay-at-infinity": f(r) -> 0 as r -> infinity, through
    the far-field series f ~ c/r + d/(2 r^2) beyond r_max.
    """

    data: object
    r_h: float
    lam: float
    chart: FoliationChart
    r: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    tau: np.ndarray
    w: np.ndarray
    far_field: tuple
    r_max: float
    normalization: str = "decay-at-infinity"
    _ode: object = field(repr=False, compare=False, default=None)
    _f_shift: float = 0.0

    def _state(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= self.r_h) or np.any(r > self.r_max):
            raise JangSolverError("radius outside the solution grid")
        u = np.sqrt(r - self.r_h)
        if np.any(u < self._ode.t[0]):
            raise JangSolverError("radius inside the innermost offset of the solution")
        u = np.minimum(u, self._ode.t[-1])
        y = self._ode.sol(u)
        return r, y[0], y[1] + self._f_shift

    def slope(self, r):
        """f'(r) from the dense solution (series beyond r_max)."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        far = r > self.r_max
        c, d = self.far_field
        out[far] = -c / r[far] ** 2 - d / r[far] ** 3
        if np.any(~far):
            rr, w, _ = self._state(r[~far])
            out[~far] = _slope_from_w(self.data, rr, w)
        return out

    def second_derivative(self, r):
        """f''(r) from the dense solution (series beyond r_max)."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        far = r > self.r_max
        c, d = self.far_field
        out[far] = 2 * c / r[far] ** 3 + 3 * d / r[far] ** 4
        if np.any(~far):
            rr, w, _ = self._state(r[~far])
            out[~far] = _second_derivative_from_w(self.data, rr, w)
        return out

    @property
    def inner_offset(self):
        """Smallest r - r_h at which the dense solution is defined."""
        return float(self._ode.t[0]) ** 2

    def height_at_u(self, u):
        """f as a function of u = sqrt(r - r_h), resolved below the spacing of r."""
        u = np.asarray(u, dtype=float)
        if np.any(u < self._ode.t[0]) or np.any(u > self._ode.t[-1]):
            raise JangSolverError("u outside the solution grid")
        return self._ode.sol(u)[1] + self._f_shift

    def height(self, r):
        """f(r) from the dense solution (series beyond r_max)."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        far = r > self.r_max
        c, d = self.far_field
        out[far] = c / r[far] + d / (2 * r[far] ** 2)
        if np.any(~far):
            out[~far] = self._state(r[~far])[2]
        return out

    @property
    def columns(self):
        return ("r", "f", "fp", "fpp", "tau")

    def rows(self):
        return np.column_stack([self.r, self.f, self.fp, self.fpp, self.tau])


def _slope_from_w(data, r, w):
    return data.F(r) * (w - 1.0) / np.sqrt(w * (2.0 - w))


def _second_derivative_from_w(data, r, w):
    """f'' from the first-order v-equation: f'' = F' f_s + F v_r/(1 - v^2)^(3/2)."""
    F = data.F(r)
    v = w - 1.0
    one_minus_v2 = w * (2.0 - w)
    th = data.k_tan(r) + 2.0 / (r * F)
    v_r = F * (th + data.k_nn(r) * one_minus_v2 - 2.0 * w / (r * F))
    return data.dF(r) * v / np.sqrt(one_minus_v2) + F * v_r / one_minus_v2**1.5


def _blowup_rhs(data, r_h, kappa):
    """(dw/du, df/du) with the coefficients continued smoothly from the
    representable radius r~ = fl(r_h + u^2) (see ``smooth_F``); evaluating
    them at r~ directly would feed rounding steps of relative size
    eps/delta into the adaptive integrator, where theta^+ is tiny."""
    time_symmetric = data.is_time_symmetric

    def rhs(u, y):
        w = y[0]
        r, F = smooth_F(data, r_h, u, kappa)
        if time_symmetric:
            k_tan = k_nn = 0.0
        else:
            k_tan = smooth_profile(data.k_tan, data.dk_tan, r_h, r, u)
            k_nn = smooth_profile(data.k_nn, data.dk_nn, r_h, r, u)
        jac = 2.0 * u
        th = k_tan + 2.0 / (r * F)
        dw = jac * F * (th + k_nn * w * (2.0 - w) - 2.0 * w / (r * F))
        df = jac * F * (w - 1.0) / np.sqrt(w * (2.0 - w))
        return np.array([dw, df])
    return rhs


def _log_grid(r_h, delta_min, r_max, per_decade):
    decades = math.log10((r_max - r_h) / delta_min)
    delta = np.geomspace(delta_min, r_max - r_h, int(math.ceil(decades * per_decade)) + 1)
    r = np.unique(r_h + delta)
    return r[r > r_h]


def _default_delta_min(data, r_h, margin=1e9):
    """Innermost grid offset r - r_h.

    1e-14 r_h when theta^+ = k_tan + 2/(rF) involves no cancellation
    (k_tan = 0 at the MOTS). Otherwise theta^+ near r_h is the difference
    of two O(1/r) terms and carries rounding noise ~ eps |k_tan|; the grid
    then starts at the smallest offset where theta^+ exceeds that noise by
    ``margin``, since a noisy right-hand side stalls the adaptive integrator.
    """
    floor = 1e-14 * r_h
    noise = np.finfo(float).eps * 2.0 * abs(float(data.k_tan(r_h)))
    if noise == 0.0:
        return floor
    for delta in r_h * np.logspace(-14, -2, 49):
        if float(theta_plus(data, r_h + delta)) >= margin * noise:
            return max(floor, float(delta))
    raise JangSolverError("theta^+ stays within rounding noise of zero near the MOTS")


def solve_blowup(data, r_max=None, tol=1e-12, per_decade=200, delta_min=None, chart=None):
    """Blowup solution f0 of J[f] = 0 with f -> +inf at the MOTS and f(inf) = 0.

    @param r_max      outer end of the integration (default 1e4 r_h)
    @param tol        relative tolerance of the ODE integration
    @param per_decade grid samples per decade of r - r_h
    @param delta_min  innermost grid offset r - r_h (default 1e-14 r_h)
    """
    r_h = find_mots(data)
    lam = principal_eigenvalue(data, r_h)
    r_max = 1e4 * r_h if r_max is None else float(r_max)
    delta_min = _default_delta_min(data, r_h) if delta_min is None else float(delta_min)
    if chart is None:
        chart = FoliationChart.build(data, r_h, lam, r_outer=r_max)
    kappa = pole_exponent(data, r_h)
    rhs = _blowup_rhs(data, r_h, kappa)

    # Start just off the horizon with the leading local behaviour of w:
    # dw/du ~ G(u) ~ u^p, so w(u0) ~ u0 G(u0)/(p + 1).
    u0 = 0.5 * math.sqrt(delta_min)
    g0 = rhs(u0, [1e-300, 0.0])[0]
    g1 = rhs(0.5 * u0, [1e-300, 0.0])[0]
    if not (g0 > 0 and g1 > 0):
        raise JangSolverError("theta^+ is not positive just outside the MOTS")
    p = math.log2(g0 / g1)
    w0 = u0 * g0 / (p + 1.0)
    u_max = math.sqrt(r_max - r_h)
    ode = solve_ivp(rhs, (u0, u_max), [w0, 0.0], method="DOP853", rtol=min(tol, 1e-10),
                    atol=[1e-300, 1e-14 * r_h], first_step=0.01 * u0,
                    dense_output=True)
    if not ode.success:
        raise JangSolverError(f"blowup integration failed: {ode.message}")
    if np.any(ode.y[0] >= 1.0) or np.any(ode.y[0] <= 0.0):
        raise JangSolverError("slope crosses zero: solution is not monotone")

    r = _log_grid(r_h, delta_min, r_max, per_decade)
    u = np.sqrt(r - r_h)
    y = ode.sol(u)
    w, f_raw = y[0], y[1]
    fp = _slope_from_w(data, r, w)
    fpp = _second_derivative_from_w(data, r, w)

    c, d = _fit_far_field(r, fp, r_max)
    f_shift = (c / r_max + d / (2 * r_max**2)) - ode.sol(u_max)[1]
    f = f_raw + f_shift
    tau = chart.s_of_r(r)
    return RadialJangSolution(
        data=data, r_h=r_h, lam=lam, chart=chart, r=r, f=f, fp=fp, fpp=fpp, tau=tau, w=w,
        far_field=(c, d), r_max=r_max, _ode=ode, _f_shift=f_shift,
    )


def _fit_far_field(r, fp, r_max, threshold=1e-6):
    """Two-term series f' ~ -c/r^2 - d/r^3 fitted on the outer half-decade."""
    sel = r >= r_max / 3.0
    x = 1.0 / r[sel]
    y = -fp[sel] * r[sel] ** 2
    A = np.column_stack([np.ones_like(x), x, x * x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    c, d, e = coef
    scale = max(abs(c), abs(d) / r_max, 1e-300)
    if abs(e) / r_max**2 > threshold * scale or not (c > 0):
        raise JangSolverError("far-field series does not converge (far field not flat enough)")
    return float(c), float(d)


def detect_horizon(sol, rtol=1e-12):
    """Inward shooting from the far-field seed; returns where f' -> -infinity.

    The equation for w is integrated from r_max toward r_h starting from the
    fitted series f' ~ -c/r^2 - d/r^3. The graph turns vertical (w = 0,
    f' = -infinity) where w, which vanishes linearly in r - r_h there,
    extrapolates to zero; an earlier zero crossing is reported directly.
    """
    data, r_h = sol.data, sol.r_h
    c, d = sol.far_field
    r_max = sol.r_max
    F = float(data.F(r_max))
    fs = (-c / r_max**2 - d / r_max**3) / F
    v_start = fs / math.sqrt(1.0 + fs * fs)
    rhs = _blowup_rhs(data, r_h, pole_exponent(data, r_h))

    # Perturbations of v grow like r^-2 inward, so v (tiny in the far field)
    # is integrated rather than w = 1 + v, keeping the error relative to v.
    def vrhs(u, y):
        return rhs(u, [1.0 + y[0], 1.0])[:1]

    def hit(u, y):
        return 1.0 + y[0]
    hit.terminal = True
    hit.direction = -1
    u_stop = math.sqrt(1e-10 * r_h)
    with np.errstate(invalid="ignore", divide="ignore"):
        ode = solve_ivp(vrhs, (math.sqrt(r_max - r_h), u_stop), [v_start], method="DOP853",
                        rtol=rtol, atol=1e-300, events=hit)
    if ode.t_events[0].size:
        return r_h + float(ode.t_events[0][0]) ** 2
    d1, d2 = ode.t[-2] ** 2, ode.t[-1] ** 2
    w1, w2 = 1.0 + ode.y[0][-2], 1.0 + ode.y[0][-1]
    return r_h + d2 - w2 * (d1 - d2) / (w1 - w2)


# ---------------------------------------------------------------------------
# Blowup rate


@dataclass(frozen=True)
class BlowupRate:
    """Fit of f against ln(tau) in a near-horizon window."""

    slope: float
    expected: float
    sup_bounded: float
    window: tuple
    samples: int


def verify_blowup_rate(sol, chart=None, window=(1e-6, 1e-3), min_samples=50):
    """Least-squares slope of f vs ln tau and sup |f + ln(tau)/sqrt(lambda)|."""
    chart = sol.chart if chart is None else chart
    lo, hi = window
    sel = (sol.tau >= lo) & (sol.tau <= hi)
    if np.count_nonzero(sel) < min_samples:
        raise JangSolverError(f"window {window} under-resolved ({np.count_nonzero(sel)} samples)")
    x = np.log(sol.tau[sel])
    y = sol.f[sel]
    slope = float(np.polyfit(x, y, 1)[0])
    sup = float(np.max(np.abs(y + x / math.sqrt(chart.lam))))
    return BlowupRate(slope=slope, expected=-1.0 / math.sqrt(chart.lam), sup_bounded=sup,
                      window=(lo, hi), samples=int(np.count_nonzero(sel)))


# ---------------------------------------------------------------------------
# Auxiliary equation J[f] = t f
#
# Over a domain containing the MOTS the solution f_t has three parts for
# small t: a moderate piece at height ~ f_inner near the inner boundary, a
# steep ramp where t f ~ |H| (slope ~ lambda/t), and the blowup-like graph
# outside. As a graph over tau the ramp makes the equation stiff like
# 1/t^2, so the curve from the inner boundary to a matching sphere r_m just
# outside the horizon is parametrized by arc length (tau(sigma), z(sigma),
# phi(sigma)), on which the ramp is a long, slowly turning, nearly straight
# segment; beyond r_m the graph is written as (q = asinh f_tau, f) in
# log tau. Both pieces are collocated together (damped Newton) and followed
# in t from a seed obtained by shooting at moderate t.


@dataclass(frozen=True)
class AuxiliarySolution:
    """Solution f_t of J[f] = t f with f = f_inner on the inner boundary.

    ``rho`` is the coordinate along the profile curve: the signed distance
    tau across a throat ("mirrored" domain, tau < 0 on the inner sheet) or
    the radius r ("single" domain). ``sheet`` is -1 on the inner sheet.
    """

    t: float
    f_inner: float
    r_in: float
    r_m: float
    r_max: float
    domain: str
    rho: np.ndarray
    r: np.ndarray
    sheet: np.ndarray
    f: np.ndarray
    sup_tf: float
    arc_length: float
    nodes: int
    _sol: object = field(repr=False, compare=False, default=None)
    _geom: object = field(repr=False, compare=False, default=None)

    def height(self, r):
        """f_t at areal radius r > r_m on the outer side (vectorized)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < self.r_m * (1 - 1e-12)) or np.any(r > self.r_max):
            raise JangSolverError(f"height is available on [r_m, r_max] = [{self.r_m}, {self.r_max}]")
        return self._sol.sol(self._geom.xi_of_r(r))[4]

    def outer_derivatives(self, r):
        """(f, f', f'') at radii r >= r_m from the collocated system."""
        g = self._geom
        xi = g.xi_of_r(np.atleast_1d(np.asarray(r, dtype=float)))
        Y = self._sol.sol(xi)
        q, f = Y[3], Y[4]
        dq_dxi = g.rhs(self.t)(xi, Y, np.array([self.arc_length]))[3]
        rho = np.exp(g.y_a + (g.y_b - g.y_a) * xi)
        dr_dxi = (g.y_b - g.y_a) * rho * g.dr_drho(rho)
        F = g.data.F(g.radius(rho))
        dF = g.data.dF(g.radius(rho))
        fp = F * np.sinh(q)
        fpp = dF * np.sinh(q) + F * np.cosh(q) * dq_dxi / dr_dxi
        return f, fp, fpp

    @property
    def columns(self):
        return ("rho", "r", "sheet", "f")

    def rows(self):
        return np.column_stack([self.rho, self.r, self.sheet, self.f])


class _MirroredCoefficients:
    """H(tau) across a throat, tau signed; time-symmetric data only.

    H/tau is splined against log tau on the outer sheet from the horizon
    chart (with F continued smoothly from the representable radius, so the
    table is accurate down to tau ~ 1e-7 r_h) and extended by H/tau = lambda
    below the table; H is odd under tau -> -tau.
    """

    def __init__(self, chart, r_max):
        from scipy.interpolate import CubicSpline

        data, r_h, kappa = chart.data, chart.r_h, chart.kappa
        u = np.geomspace(chart.u_min, math.sqrt(r_max - r_h), 6000)
        r, F = smooth_F(data, r_h, u, kappa)
        tau = chart.s_of_u(u)
        H = 2.0 / (r * F)
        self.tau_min = tau[0]
        self.q0 = H[0] / tau[0]
        self._logq = CubicSpline(np.log(tau), np.log(H / tau))
        self._r = CubicSpline(np.log(tau), 2.0 * np.log(u))
        self.r_h = r_h
        self.chart = chart

    def H(self, x):
        a = np.abs(x)
        q = np.where(a > self.tau_min, np.exp(self._logq(np.log(np.maximum(a, self.tau_min)))),
                     self.q0)
        return x * q

    def radius(self, x):
        a = np.maximum(np.abs(x), self.tau_min)
        return self.r_h + np.exp(self._r(np.log(a)))


class _AuxGeometry:
    """Coordinates, coefficients and the collocation system of the domain."""

    def __init__(self, data, r_in, r_max, r_h=None):
        self.data = data
        self.r_h = r_h
        self.r_max = float(r_max)
        self.r_in = float(r_in)
        throat = (r_h is not None and r_h == data.r_min and pole_exponent(data, r_h) == 0.5)
        if throat:
            if not data.is_time_symmetric:
                raise DataError("mirrored auxiliary domain needs time-symmetric data")
            if not r_h < r_in < r_max:
                raise DataError("inner boundary must satisfy r_h < r_in < r_max")
            self.mode = "mirrored"
            chart = FoliationChart.build(data, r_h, principal_eigenvalue(data, r_h),
                                         r_outer=r_max)
            self._mirror = _MirroredCoefficients(chart, r_max)
            self._chart = chart
            self.r_m = 1.5 * r_h
            self.rho_in = -float(chart.s_of_r(r_in))
        else:
            if r_h is not None and not data.r_min < r_in < r_h:
                raise DataError("without a throat the inner boundary must satisfy r_min < r_in < r_h")
            if not data.r_min < r_in < r_max:
                raise DataError("inner boundary must satisfy r_min < r_in < r_max")
            self.mode = "single"
            self.r_m = 1.5 * (r_h if r_h is not None else r_in)
            self.rho_in = self.r_in
        self.rho_m = float(self.rho_of_r(self.r_m))
        self.rho_max = float(self.rho_of_r(self.r_max))
        self.y_a, self.y_b = math.log(self.rho_m), math.log(self.rho_max)
        self.F_max = float(data.F(self.r_max))

    # coordinate helpers
    def rho_of_r(self, r):
        return self._chart.s_of_r(r) if self.mode == "mirrored" else np.asarray(r, dtype=float)

    def radius(self, rho):
        return self._mirror.radius(rho) if self.mode == "mirrored" else rho

    def dr_drho(self, rho):
        return 1.0 / self.data.F(self.radius(rho)) if self.mode == "mirrored" else np.ones_like(rho)

    def xi_of_r(self, r):
        return (np.log(self.rho_of_r(r)) - self.y_a) / (self.y_b - self.y_a)

    def coefficients(self, rho):
        """(dtau/drho, H, k_nn, k_tan), vectorized in rho."""
        rho = np.asarray(rho, dtype=float)
        if self.mode == "mirrored":
            zero = np.zeros_like(rho)
            return np.ones_like(rho), self._mirror.H(rho), zero, zero
        F = np.broadcast_to(self.data.F(rho), rho.shape)
        knn = np.broadcast_to(self.data.k_nn(rho), rho.shape)
        ktan = np.broadcast_to(self.data.k_tan(rho), rho.shape)
        return F, 2.0 / (rho * F), knn, ktan

    def tau_along(self, rho):
        """Metric distance along rho samples (for arc lengths)."""
        if self.mode == "mirrored":
            return np.asarray(rho, dtype=float)
        g = self.coefficients(rho)[0]
        return np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(rho))])

    def rhs(self, t):
        def rhs(xi, Y, p):
            L = p[0]
            rho1, z, phi, q, f = Y
            g, H, knn, ktan = self.coefficients(rho1)
            sin, cos = np.sin(phi), np.cos(phi)
            d_rho1 = L * cos / g
            d_z = L * sin
            d_phi = L * (knn * cos * cos + ktan + t * z - H * sin)
            rho2 = np.exp(self.y_a + (self.y_b - self.y_a) * xi)
            g, H, knn, ktan = self.coefficients(rho2)
            scale = (self.y_b - self.y_a) * rho2 * g
            d_q = scale * (knn + np.cosh(q) ** 2 * (ktan + t * f) - 0.5 * np.sinh(2 * q) * H)
            d_f = scale * np.sinh(q)
            return np.vstack([d_rho1, d_z, d_phi, d_q, d_f])
        return rhs

    def bc(self, t, f_inner):
        slope_factor = self.F_max * (1.0 / self.r_max + math.sqrt(t))

        def bc(A, B, p):
            return np.array([
                A[0] - self.rho_in, A[1] - f_inner,
                B[0] - self.rho_m, B[1] - A[4], math.sin(B[2]) - math.tanh(A[3]),
                math.sinh(B[3]) + slope_factor * B[4],
            ])
        return bc

    def inner_boundary_mean_curvature(self):
        return 2.0 / (self.r_in * float(self.data.F(self.r_in)))


def _aux_system(t, geom, q_cap):
    """Scalar (q, f) system in rho for shooting. The coefficients are
    evaluated at q clipped to +-q_cap, which keeps the right-hand side
    continuous and bounded once a trajectory turns vertical; such
    trajectories are recognized afterwards by max |q| >= q_cap."""
    def rhs(x, y):
        q, f = y
        q = min(max(q, -q_cap), q_cap)
        g, H, knn, ktan = (float(c[0]) for c in geom.coefficients(np.array([x])))
        dq = knn + math.cosh(q) ** 2 * (ktan + t * f) - 0.5 * math.sinh(2 * q) * H
        return np.array([g * dq, g * math.sinh(q)])

    def jac(x, y):
        q, f = y
        q = min(max(q, -q_cap), q_cap)
        g, H, knn, ktan = (float(c[0]) for c in geom.coefficients(np.array([x])))
        return g * np.array([
            [math.sinh(2 * q) * (ktan + t * f) - math.cosh(2 * q) * H, t * math.cosh(q) ** 2],
            [math.cosh(q), 0.0],
        ])
    return rhs, jac


def _shoot_auxiliary(geom, t, f_inner, rtol=1e-8, max_steps=200):
    """Seed solution by inward shooting on the amplitude A = f(r_max).

    Inward, the outer graph and the ramp are attracting, so f(r_in) grows
    monotonically with A until trajectories turn vertical; A is bracketed
    by bisection in log A and refined by Brent's method. Reliable for
    moderate t only: as t -> 0 the admissible window in A becomes
    exponentially thin, which is why small t is reached by continuation.
    """
    if f_inner == 0.0:
        rho = np.geomspace(geom.rho_m, geom.rho_max, 400)
        if geom.mode == "single":
            rho = np.concatenate([np.linspace(geom.rho_in, geom.rho_m, 100, endpoint=False), rho])
        zero = np.zeros_like(rho)
        return rho, zero, zero
    q_cap = math.asinh(10.0 / t) + 3.0
    rhs, jac = _aux_system(t, geom, q_cap)
    slope_factor = geom.F_max * (1.0 / geom.r_max + math.sqrt(t))

    def shoot(log_amp):
        amp = math.exp(log_amp)
        y0 = [math.asinh(-slope_factor * amp), amp]
        with np.errstate(over="ignore"):
            ode = solve_ivp(rhs, (geom.rho_max, geom.rho_in), y0, method="LSODA", jac=jac,
                            rtol=rtol, atol=[1e-12, 1e-300])
        if (not ode.success or not np.isfinite(ode.y[1][-1])
                or np.max(np.abs(ode.y[0])) >= q_cap):
            return math.inf, ode
        return ode.y[1][-1] - f_inner, ode

    # bracket upward from a negligible amplitude so that no trial starts
    # far above the admissible window
    lo = math.log(1e-30 * max(f_inner, 1.0))
    g_lo, _ = shoot(lo)
    if not g_lo < 0:
        raise JangSolverError("auxiliary shooting: boundary value not bracketed")
    hi = lo
    for _ in range(max_steps):
        hi = lo + math.log(10.0)
        g_hi, _ = shoot(hi)
        if g_hi > 0:
            break
        lo, g_lo = hi, g_hi
    else:
        raise JangSolverError("auxiliary shooting: boundary value not bracketed")
    for _ in range(max_steps):
        if math.isfinite(g_hi):
            break
        mid = 0.5 * (lo + hi)
        g_mid, _ = shoot(mid)
        if g_mid > 0:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
    else:
        raise JangSolverError("auxiliary shooting stagnated")
    log_amp = brentq(lambda x: shoot(x)[0], lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                     maxiter=max_steps)
    g, ode = shoot(log_amp)
    if not math.isfinite(g):
        raise JangSolverError("auxiliary shooting: no graphical solution found")
    return ode.t[::-1], ode.y[1][::-1], ode.y[0][::-1]


def _inner_curve(geom, rho, z, n):
    """Arc-length parametrization of the polyline (rho, z) on n nodes."""
    tau = geom.tau_along(rho)
    s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(tau), np.diff(z)))])
    L = s[-1]
    xi = np.linspace(0.0, 1.0, n) if np.isscalar(n) else n
    rho_i = np.interp(xi * L, s, rho)
    z_i = np.interp(xi * L, s, z)
    tau_i = np.interp(xi * L, s, tau)
    phi = np.arctan2(np.gradient(z_i, xi), np.gradient(tau_i, xi))
    return xi, rho_i, z_i, phi, L


def _guess_from_graph(geom, rho, f, q, n=600):
    inner = rho <= geom.rho_m
    f_m = np.interp(geom.rho_m, rho, f)
    rho_i = np.append(rho[inner], geom.rho_m)
    z_i = np.append(f[inner], f_m)
    xi, rho1, z1, phi1, L = _inner_curve(geom, rho_i, z_i, n)
    rho2 = np.exp(geom.y_a + (geom.y_b - geom.y_a) * xi)
    return xi, np.vstack([rho1, z1, phi1, np.interp(rho2, rho, q), np.interp(rho2, rho, f)]), L


def _rescale_guess(geom, sol, t_old, t_new, f_inner_new, n_max=2000):
    """Next continuation guess: the inner part (beyond the throat) rescaled
    so that the ramp position t z ~ |H| is preserved; the outside kept."""
    idx = np.unique(np.round(np.linspace(0, sol.x.size - 1, min(n_max, sol.x.size))).astype(int))
    xi = sol.x[idx]
    rho1, z, _, q, f = sol.y[:, idx]
    inside = rho1 < (0.0 if geom.mode == "mirrored" else (geom.r_h or -np.inf))
    if np.any(inside):
        z0 = z[np.argmin(np.abs(rho1 - (0.0 if geom.mode == "mirrored" else geom.r_h)))]
        z = np.where(inside, z0 + (z - z0) * (t_old / t_new), z)
    z = z + (f_inner_new - z[0]) * (1.0 - xi) ** 2
    _, rho1, z1, phi1, L = _inner_curve(geom, rho1, z, xi)
    return xi, np.vstack([rho1, z1, phi1, q, f]), L


def _collocate(geom, t, f_inner, xi, Y, L, tol, max_nodes):
    with np.errstate(over="ignore", invalid="ignore"):
        res = solve_bvp(geom.rhs(t), geom.bc(t, f_inner), xi, Y, p=[L], tol=tol,
                        max_nodes=max_nodes)
    if res.status != 0:
        raise JangSolverError(f"auxiliary collocation did not converge at t = {t!r}: {res.message}")
    return res


def _package(geom, t, f_inner, res):
    xi = res.x
    rho1, z = res.y[0], res.y[1]
    rho2 = np.exp(geom.y_a + (geom.y_b - geom.y_a) * xi[1:])
    rho = np.concatenate([rho1, rho2])
    f = np.concatenate([z, res.y[4][1:]])
    r = geom.radius(rho)
    sheet = np.where(rho < 0, -1, 1) if geom.mode == "mirrored" else np.ones(rho.size, dtype=int)
    return AuxiliarySolution(
        t=float(t), f_inner=float(f_inner), r_in=geom.r_in, r_m=geom.r_m, r_max=geom.r_max,
        domain=geom.mode, rho=rho, r=r, sheet=sheet, f=f,
        sup_tf=float(t * np.max(np.abs(f))), arc_length=float(res.p[0]), nodes=int(xi.size),
        _sol=res, _geom=geom,
    )


def auxiliary_continuation(data, ts, f_inner=None, r_in=None, r_max=None, tol=1e-6,
                           factor=3.0, max_nodes=200_000):
    """Solutions of J[f_t] = t f_t for every t in ``ts`` (returned in that order).

    The path starts from a shooting seed at t_seed = 0.04/r_h^2 and changes t
    by at most ``factor`` per collocation step. ``f_inner`` is the boundary value
    at the smallest t; other steps keep t * f_inner fixed (default
    f_inner = delta/(2t), delta = H of the inner boundary sphere).

    @param r_in  inner boundary (areal radius on the inner sheet for a throat)
    @param tol   collocation tolerance (relative residual)
    """
    ts = [float(t) for t in ts]
    if not ts or min(ts) <= 0:
        raise DataError("regularization t must be positive")
    try:
        r_h = find_mots(data)
    except NoMOTSError:
        r_h = None
    scale = r_h if r_h is not None else (float(r_in) if r_in is not None else 1.5 * data.r_min)
    if r_in is None:
        if r_h is None or r_h != data.r_min:
            raise DataError("r_in is required unless the data have a throat at the horizon")
        r_in = 1.5 * r_h
    t_seed = 0.04 / scale**2
    if r_max is None:
        r_max = min(1e3 * scale, 10 * scale + 40 / math.sqrt(t_seed))
    geom = _AuxGeometry(data, r_in, r_max, r_h)
    delta = geom.inner_boundary_mean_curvature()
    c_inner = delta / 2.0 if f_inner is None else float(f_inner) * min(ts)
    if c_inner < 0:
        raise DataError("f_inner must be non-negative")

    rho, f, q = _shoot_auxiliary(geom, t_seed, c_inner / t_seed)
    xi, Y, L = _guess_from_graph(geom, rho, f, q)
    seed = _collocate(geom, t_seed, c_inner / t_seed, xi, Y, L, tol, max_nodes)
    out = {}
    # walk down from the seed, then up from it
    for targets in (sorted({t for t in ts if t <= t_seed}, reverse=True),
                    sorted({t for t in ts if t > t_seed})):
        res, t_cur = seed, t_seed
        for target in targets:
            while abs(math.log(t_cur / target)) > 1e-12:
                t_next = max(target, t_cur / factor) if target < t_cur else min(target, t_cur * factor)
                xi, Y, L = _rescale_guess(geom, res, t_cur, t_next, c_inner / t_next)
                res = _collocate(geom, t_next, c_inner / t_next, xi, Y, L, tol, max_nodes)
                t_cur = t_next
            out[target] = _package(geom, t_cur, c_inner / t_cur, res)
    return [out[t] for t in ts]


def solve_auxiliary(data, t, f_inner=None, r_in=None, r_max=None, tol=1e-6):
    """Solve J[f_t] = t f_t with f_t = f_inner on the inner boundary.

    For data with a throat at r_min = r_h (time-symmetric, F ~ (r - r_h)^(-1/2))
    the domain is the doubled slice cut at areal radius ``r_in`` on the inner
    sheet, so the MOTS lies inside it. Otherwise the domain is [r_in, r_max]
    with r_in < r_h when a MOTS exists. At r_max the Yukawa condition
    f_r = -(1/r + sqrt(t)) f of the far-field linearization is imposed.
    """
    return auxiliary_continuation(data, [t], f_inner=f_inner, r_in=r_in, r_max=r_max, tol=tol)[0]
