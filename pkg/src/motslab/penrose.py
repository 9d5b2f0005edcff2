r"""Penrose-like mass bound m >= θ sqrt(|Σ|/16π) from the Jang slice.

For a slice sphere S_r (area 4πr^2 in ḡ) the two ingredients are

    C_r = 4 - (H̄ - q(ē3)) sqrt(|S_r|/π) = 4 - 2r (H̄ - q(ē3)),
    σ_r = sqrt(|S_r|/π) / (r^2 I(r)),   I(r) = ∫_r^∞ sqrt(ḡ_rr(ρ))/ρ^2 dρ,

where σ_r is the capacity-type Rayleigh infimum of |df|^2_{L^2(M̄_r)} over
|f|^2_{L^2(S_r)}, attained by the radial harmonic function. The row
coefficient is

    θ_r = σ_r C_r / (2 (C_r + σ_r)) · sqrt(|S_r| / |Σ|_g).

The mass bound takes the supremum of θ_r over the admissible rows of a
near-horizon window, provided one of the two gating conditions holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import quad

from .radial_data import DataError, adm_mass
from .slice_geometry import induced_metric, mean_curvature_and_q


__all__ = [
    "PenroseError",
    "PenroseRow",
    "ConditionReport",
    "PenroseReport",
    "TABLE_RADII",
    "c_coefficient",
    "capacity_integral",
    "capacity_sigma",
    "theta_row",
    "penrose_rows",
    "rayleigh_quotient",
    "harmonic_trial",
    "random_trials",
    "schwarzschild_C",
    "schwarzschild_sigma",
    "schwarzschild_theta",
    "implied_sigma",
    "q_sup_near_horizon",
    "check_conditions",
    "penrose_report",
    "mass_bound",
]

# radii (in units of m) of the reference Schwarzschild table
TABLE_RADII = (2.001, 2.01, 2.1, 2.5, 3.0)

_QUAD = dict(epsabs=1e-10, epsrel=1e-12, limit=400)


class PenroseError(RuntimeError):
    """No certified bound: neither gating condition holds, or no admissible row."""


def _inner(data, sol):
    return sol.r_h if sol is not None else data.r_min


def _check_r0(data, sol, r0):
    r0 = float(r0)
    if not r0 > _inner(data, sol):
        raise DataError(f"radius {r0!r} is not outside the horizon; the capacity integral diverges")
    return r0


def c_coefficient(data, sol, r):
    """C_r = 4 - 2r (H̄ - q(ē3)); the minimum over S_r is trivial by symmetry."""
    Hbar, q = mean_curvature_and_q(data, sol, r)
    return 4.0 - 2.0 * np.asarray(r, dtype=float) * (Hbar - q)


def _split_integral(fun, r_h, r0, r_mid):
    """∫_{r0}^∞ fun(ρ, ρ - r_h) dρ: ρ = r_h + e^t on [r0, r_mid], u = 1/ρ beyond.

    The offset ρ - r_h = e^t is passed separately so that integrands with a
    factor 1/(ρ - r_h) keep full precision next to the horizon.
    """
    near = 0.0
    if r0 < r_mid:
        t0, t1 = math.log(r0 - r_h), math.log(r_mid - r_h)
        near, _ = quad(lambda t: fun(r_h + math.exp(t), math.exp(t)) * math.exp(t), t0, t1, **_QUAD)
    lo = max(r0, r_mid)
    tail, _ = quad(lambda u: fun(1.0 / u, 1.0 / u - r_h) / u**2, 0.0, 1.0 / lo, **_QUAD)
    return near + tail


def capacity_integral(data, sol, r0):
    """I(r0) = ∫_{r0}^∞ sqrt(ḡ_rr)/ρ^2 dρ.

    The inner part runs in t = ln(ρ - r_h), which absorbs the 1/(ρ - r_h)
    growth of sqrt(ḡ_rr) at a cylindrical end; the tail runs in u = 1/ρ.
    """
    r0 = _check_r0(data, sol, r0)
    r_h = _inner(data, sol)
    g = lambda rho, _: math.sqrt(float(induced_metric(data, sol, rho))) / rho**2
    return _split_integral(g, r_h, r0, 10.0 * max(r_h, r0 - r_h))


def capacity_sigma(data, sol, r0):
    """σ = sqrt(|S_r0|/π) / (r0^2 I(r0)) = 2/(r0 I(r0))."""
    r0 = _check_r0(data, sol, r0)
    return 2.0 / (r0 * capacity_integral(data, sol, r0))


def theta_row(C, sigma, r, horizon_area):
    """θ_r = σC/(2(C+σ)) sqrt(4πr^2/|Σ|_g); nan when C <= 0 (inadmissible)."""
    if not C > 0:
        return float("nan")
    return sigma * C / (2.0 * (C + sigma)) * math.sqrt(4 * math.pi * r * r / horizon_area)


@dataclass(frozen=True)
class PenroseRow:
    r: float
    C: float
    sigma: float
    theta: float

    @property
    def admissible(self):
        return self.C > 0 and math.isfinite(self.theta)

    def row(self):
        return (self.r, self.C, self.sigma, self.theta)


def penrose_rows(data, sol, radii):
    """Rows (r, C_r, σ_r, θ_r) from the generic slice pipeline."""
    area = 4 * math.pi * sol.r_h**2
    rows = []
    for r in np.atleast_1d(np.asarray(radii, dtype=float)):
        C = float(c_coefficient(data, sol, float(r)))
        sigma = capacity_sigma(data, sol, float(r))
        rows.append(PenroseRow(float(r), C, sigma, theta_row(C, sigma, float(r), area)))
    return rows


# Rayleigh quotients --------------------------------------------------------

def rayleigh_quotient(data, sol, r0, f, df):
    """sqrt(|S|/π) |df|^2_{L^2(M̄_r0)} / |f|^2_{L^2(S_r0)} for a radial trial f.

    |df|^2 = f'^2/ḡ_rr and dV = 4π ρ^2 sqrt(ḡ_rr) dρ, so the quotient is
    (2/r0) ∫ f'^2 ρ^2/sqrt(ḡ_rr) dρ / f(r0)^2.
    """
    r0 = _check_r0(data, sol, r0)
    r_h = _inner(data, sol)
    g = lambda rho, _: df(rho) ** 2 * rho**2 / math.sqrt(float(induced_metric(data, sol, rho)))
    energy = _split_integral(g, r_h, r0, 10.0 * max(r_h, r0 - r_h))
    return 2.0 / r0 * energy / f(r0) ** 2


def harmonic_trial(data, sol, r0):
    """(f, f') of the radial harmonic function with f(r0) = 1, f(∞) = 0."""
    I = capacity_integral(data, sol, r0)
    df = lambda rho: -math.sqrt(float(induced_metric(data, sol, rho))) / rho**2 / I
    f = lambda rho: capacity_integral(data, sol, rho) / I
    return f, df


def random_trials(r0, n=50, seed=0):
    """n random radial trials f = Σ w_k (r0/ρ)^{p_k} e^{-b_k (ρ - r0)/r0}, f(r0) = 1.

    Every trial vanishes at infinity with finite energy (p_k > 1/2).
    """
    rng = np.random.default_rng(seed)
    trials = []
    for _ in range(n):
        k = int(rng.integers(1, 4))
        w = rng.dirichlet(np.ones(k))
        p = rng.uniform(0.6, 4.0, k)
        b = rng.uniform(0.0, 2.0, k)

        def f(rho, w=w, p=p, b=b):
            return float(np.sum(w * (r0 / rho) ** p * np.exp(-b * (rho - r0) / r0)))

        def df(rho, w=w, p=p, b=b):
            terms = w * (r0 / rho) ** p * np.exp(-b * (rho - r0) / r0)
            return float(np.sum(terms * (-p / rho - b / r0)))

        trials.append((f, df))
    return trials


# Schwarzschild closed forms -------------------------------------------------

def schwarzschild_C(r, m=1.0):
    """C_r of the time-symmetric Schwarzschild slice (depends on x = r/m)."""
    x = np.asarray(r, dtype=float) / m
    return (4 - 4 * np.sqrt((x - 2) * (x**4 - 16) / x**5)
            - 64 / np.sqrt(x**5 * (x**3 + 2 * x**2 + 4 * x + 8)))


def _schwarzschild_I(x):
    # y^4 - 16 = (y - 2)(y + 2)(y^2 + 4)
    g = lambda y, d: math.sqrt(y / ((y + 2) * (y * y + 4))) / d
    return _split_integral(g, 2.0, x, 20.0)


def schwarzschild_sigma(r, m=1.0):
    """σ_r = 2/(x ∫_x^∞ sqrt(y/((y-2)(y^4-16))) dy), x = r/m."""
    x = float(r) / m
    if not x > 2:
        raise DataError("capacity integral diverges at the horizon")
    return 2.0 / (x * _schwarzschild_I(x))


def schwarzschild_theta(r, m=1.0):
    """θ_r = x/(4(1/σ_r + 1/C_r)) with x = r/m."""
    x = float(r) / m
    return x / (4 * (1 / schwarzschild_sigma(x) + 1 / float(schwarzschild_C(x))))


def implied_sigma(r, theta, C, m=1.0):
    """σ that reproduces a given θ_r with the given C_r (table diagnostics)."""
    x = float(r) / m
    return 1.0 / (x / (4 * theta) - 1 / C)


# conditions and the bound ---------------------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    condition1_value: float
    condition1_holds: bool
    q_sup: float
    condition2_threshold: float
    condition2_holds: bool

    @property
    def any_holds(self):
        return self.condition1_holds or self.condition2_holds

    @property
    def holding(self):
        if self.condition2_holds:
            return "condition2"
        if self.condition1_holds:
            return "condition1"
        return None

    def to_dict(self):
        return {
            "condition1": {"value": self.condition1_value, "threshold": 4.0,
                           "holds": self.condition1_holds},
            "condition2": {"sup_q": self.q_sup, "threshold": self.condition2_threshold,
                           "holds": self.condition2_holds},
        }


def check_conditions(lam, C1, C2, C3, q_sup):
    """Condition 1: λ C1²/C3² (1 + 2 C1⁴/(C2² C3²)) < 4; Condition 2: sup|q| < 2 sqrt(λ)."""
    value = lam * C1**2 / C3**2 * (1 + 2 * C1**4 / (C2**2 * C3**2))
    threshold = 2 * math.sqrt(lam)
    return ConditionReport(float(value), bool(value < 4), float(q_sup), threshold,
                           bool(q_sup < threshold))


def q_sup_near_horizon(data, sol, r_hi, n=400, delta_min_ratio=1e-10):
    """sup |q(ē3)| over r - r_h in [delta_min_ratio r_h, r_hi - r_h] (log grid).

    The lower end is raised to the innermost offset of the solution when
    that is larger.
    """
    r_h = sol.r_h
    delta_min = max(delta_min_ratio * r_h, 1.001 * sol.inner_offset)
    r = r_h + np.geomspace(delta_min, r_hi - r_h, n)
    _, q = mean_curvature_and_q(data, sol, r)
    return float(np.max(np.abs(q)))


@dataclass(frozen=True)
class PenroseReport:
    rows: list
    conditions: ConditionReport
    window: tuple
    theta: float
    theta_radius: float
    mass_bound: float
    adm: float
    horizon_area: float
    decay: dict = field(default_factory=dict)

    @property
    def slack(self):
        return self.adm - self.mass_bound

    def to_dict(self):
        return {
            "rows": [dict(zip(("r", "C", "sigma", "theta"), row.row())) for row in self.rows],
            "conditions": self.conditions.to_dict(),
            "window": list(self.window),
            "theta": self.theta,
            "theta_radius": self.theta_radius,
            "mass_bound": self.mass_bound,
            "adm": self.adm,
            "slack": self.slack,
            "horizon_area": self.horizon_area,
            "decay_constants": self.decay,
        }


def penrose_report(sol, decay=None, radii=None, window=None, n_window=41):
    """Table rows, gating conditions and the certified bound.

    @param decay   cylinder decay constants with attributes C1, C2, C3 (fitted
                   from ``sol`` when None)
    @param radii   rows to tabulate (default: the table radii scaled by the
                   horizon radius / 2)
    @param window  (r_lo, r_hi] where rows enter the supremum (default
                   (r_h, 1.05 r_h])
    """
    data = sol.data
    scale = sol.r_h / 2.0
    radii = [scale * x for x in TABLE_RADII] if radii is None else list(radii)
    lo, hi = (sol.r_h, 1.05 * sol.r_h) if window is None else map(float, window)
    if decay is None:
        from .cylinder_decay import fit_decay_constants, to_cylinder
        decay = fit_decay_constants(to_cylinder(sol))
    conditions = check_conditions(sol.lam, decay.C1, decay.C2, decay.C3,
                                  q_sup_near_horizon(data, sol, hi))
    rows = penrose_rows(data, sol, radii)
    window_rows = penrose_rows(data, sol, lo + (hi - lo) * np.linspace(0, 1, n_window)[1:])
    admissible = [row for row in window_rows if row.admissible]
    area = 4 * math.pi * sol.r_h**2
    if conditions.any_holds and admissible:
        best = max(admissible, key=lambda row: row.theta)
        theta, theta_r = best.theta, best.r
        bound = theta * math.sqrt(area / (16 * math.pi))
    else:
        theta = theta_r = bound = float("nan")
    adm = adm_mass(data).mass
    decay_dict = decay.to_dict() if hasattr(decay, "to_dict") else {
        "C1": decay.C1, "C2": decay.C2, "C3": decay.C3}
    return PenroseReport(rows, conditions, (lo, hi), theta, theta_r, bound, adm, area, decay_dict)


def mass_bound(report):
    """(θ, bound, adm, slack); raises PenroseError without a certified bound."""
    if not report.conditions.any_holds:
        raise PenroseError("neither condition holds: no certified bound")
    if not math.isfinite(report.theta):
        raise PenroseError("no admissible row in the window")
    return report.theta, report.mass_bound, report.adm, report.slack

