r"""The blowup graph as a graph over the cylinder, and its decay constants.

Near the MOTS the graph of the blowup solution f is also the graph of
u(z) = s over the half cylinder Σ x [z̄, ∞), with z = f. In spherical
symmetry u depends on z only, |∇u| = |u'| and |∇²u| = |u''|, with

    u' = 1/∂_s f,    u'' = -∂_s² f/(∂_s f)^3,    ∂_s f = f'/F.

Two-sided exponential decay C2 e^{-√λ z} <= u <= C1 e^{-√λ z} translates
back into C2/(C1 s) <= |∂_s f| <= C1/(C3 s). Foliation C indexes the level
sets of f by γ = exp(-√λ f).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq

from .jang_radial import JangSolverError


__all__ = [
    "DecayError",
    "CylinderGraph",
    "DecayConstants",
    "GradientReport",
    "FoliationC",
    "CYLINDER_COLUMNS",
    "to_cylinder",
    "fit_decay_constants",
    "gradient_bounds_check",
    "foliation_C",
    "cylinder_rows",
]

CYLINDER_COLUMNS = ("z", "u", "uprime", "u_times_exp", "lower_margin", "upper_margin")


class DecayError(RuntimeError):
    """Monotonicity failure, under-resolved window, or violated decay bound."""

    def __init__(self, message, **where):
        super().__init__(message + (f" at {where}" if where else ""))
        self.where = where


@dataclass(frozen=True)
class CylinderGraph:
    z: np.ndarray
    u: np.ndarray
    du: np.ndarray
    d2u: np.ndarray
    r: np.ndarray
    z_bar: float
    s0: float
    lam: float


def to_cylinder(sol, s0=None):
    """Samples (z, u, u', u'') on z >= z̄ where z̄ = f at s = s0.

    s0 defaults to the chart region s̄ = chart.s_max, the barrier range on
    which the blowup rate is certified.
    """
    s0 = sol.chart.s_max if s0 is None else float(s0)
    sel = sol.tau <= s0
    if np.count_nonzero(sel) < 10:
        raise DecayError("fewer than 10 samples inside s <= s0")
    r, f, fp, fpp, s = sol.r[sel], sol.f[sel], sol.fp[sel], sol.fpp[sel], sol.tau[sel]
    F = sol.data.F(r)
    dF = sol.data.dF(r)
    if not np.all(fp < 0):
        raise DecayError("f is not strictly decreasing near the horizon")
    fs = fp / F
    fss = (fpp - dF / F * fp) / F**2
    # order by increasing z (= decreasing s)
    order = np.argsort(f)
    z = f[order]
    if np.any(np.diff(z) <= 0):
        raise DecayError("z = f is not strictly monotone on the grid")
    du = 1.0 / fs[order]
    d2u = -fss[order] / fs[order] ** 3
    z_bar = float(np.interp(s0, s[::-1], f[::-1])) if s[-1] >= s0 else float(z[0])
    return CylinderGraph(z, s[order], du, d2u, r[order], max(z_bar, float(z[0])), s0, sol.lam)


@dataclass(frozen=True)
class DecayConstants:
    rate: float
    expected_rate: float
    C1: float
    C1_pure: float
    C2: float
    C3: float
    window: tuple
    n: int

    @property
    def relative_rate_error(self):
        return abs(self.rate / self.expected_rate - 1.0)

    @property
    def flagged(self):
        return self.relative_rate_error > 0.05

    def to_dict(self):
        return {"rate": self.rate, "sqrt_lambda": self.expected_rate, "C1": self.C1,
                "C1_pure": self.C1_pure, "C2": self.C2, "C3": self.C3,
                "window": list(self.window), "samples": self.n}


def fit_decay_constants(cg, z_bar=None, decades=4.0):
    """Rate and (C1, C2, C3) on the window [z̄, z̄ + decades ln 10/√λ].

    C1 bounds |u| + |u'| + |u''|; ``C1_pure`` bounds |u| alone.
    """
    root = math.sqrt(cg.lam)
    z0 = cg.z_bar if z_bar is None else float(z_bar)
    z1 = z0 + decades * math.log(10.0) / root
    sel = (cg.z >= z0) & (cg.z <= z1)
    if np.count_nonzero(sel) < 50 or cg.z[-1] < z1:
        raise DecayError("decay window under-resolved", z_bar=z0, z_end=float(cg.z[-1]))
    z, u, du, d2u = cg.z[sel], cg.u[sel], cg.du[sel], cg.d2u[sel]
    slope = np.polyfit(z, np.log(u), 1)[0]
    w = np.exp(root * z)
    return DecayConstants(
        rate=float(-slope), expected_rate=root,
        C1=float(np.max((np.abs(u) + np.abs(du) + np.abs(d2u)) * w)),
        C1_pure=float(np.max(np.abs(u) * w)),
        C2=float(np.min(np.abs(u) * w)),
        C3=float(np.min(np.abs(du) * w)),
        window=(z0, z1), n=int(z.size),
    )


@dataclass(frozen=True)
class GradientReport:
    lower_margin: float
    upper_margin: float
    tangential_bound: float
    s_limit: float
    s_min: float
    n: int

    @property
    def holds(self):
        return self.lower_margin >= 0 and self.upper_margin >= 0

    def to_dict(self):
        return {"lower_margin": self.lower_margin, "upper_margin": self.upper_margin,
                "tangential_gradient": 0.0, "tangential_bound": self.tangential_bound,
                "s_times_dsf_limit": self.s_limit, "s_min": self.s_min, "samples": self.n,
                "holds": self.holds}


def gradient_bounds_check(sol, consts, s_max=None, strict=True):
    """C2/(C1 s) <= |∂_s f| <= C1/(C3 s) on the grid points with s <= s_max.

    Margins are reported in the scale-free form s |∂_s f| - C2/C1 and
    C1/C3 - s |∂_s f|. The tangential gradient vanishes identically, so its
    bound sqrt(2) C1^2/(C2 C3) holds trivially.
    """
    s_max = sol.chart.s_max if s_max is None else float(s_max)
    sel = sol.tau <= s_max
    s = sol.tau[sel]
    g = s * np.abs(sol.fp[sel] / sol.data.F(sol.r[sel]))
    lower = g - consts.C2 / consts.C1
    upper = consts.C1 / consts.C3 - g
    if strict:
        for name, margin in (("lower", lower), ("upper", upper)):
            if np.any(margin < 0):
                i = int(np.argmin(margin))
                raise DecayError(f"{name} gradient bound violated", s=float(s[i]), margin=float(margin[i]))
    return GradientReport(float(lower.min()), float(upper.min()),
                          math.sqrt(2) * consts.C1**2 / (consts.C2 * consts.C3),
                          float(g[0]), float(s[0]), int(s.size))


@dataclass(frozen=True)
class FoliationC:
    """Level sets Σ_γ = {f = -(1/√λ) log γ} and the comparability constants."""

    sol: object
    root: float
    alpha1: float
    alpha2: float
    window: tuple

    def gamma_of_r(self, r):
        return np.exp(-self.root * self.sol.height(np.atleast_1d(np.asarray(r, dtype=float))))

    def u_of_gamma(self, gamma):
        """u = sqrt(r - r_h) of the level set γ (root of f = -ln γ/√λ).

        Solving in u keeps the level set resolved where f' ~ 1/(r - r_h)
        would amplify the spacing of doubles in r.
        """
        target = -math.log(gamma) / self.root
        sol = self.sol
        fun = lambda u: float(sol.height_at_u(u)) - target
        lo, hi = float(sol._ode.t[0]), float(sol._ode.t[-1])
        if fun(lo) < 0 or fun(hi) > 0:
            raise JangSolverError("level set outside the solution grid")
        return brentq(fun, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    def r_of_gamma(self, gamma):
        u = self.u_of_gamma(gamma)
        return self.sol.r_h + u * u


def foliation_C(sol, lam=None, window=(1e-6, 1e-2)):
    """γ = exp(-√λ f) with α1 = sup max(γ/τ, τ/γ), α2 = sup max(γ_τ, 1/γ_τ)."""
    lam = sol.lam if lam is None else float(lam)
    root = math.sqrt(lam)
    lo, hi = (w * sol.r_h for w in window)
    sel = (sol.tau >= lo) & (sol.tau <= hi)
    if np.count_nonzero(sel) < 20:
        raise DecayError("foliation C window under-resolved", window=window)
    tau = sol.tau[sel]
    gamma = np.exp(-root * sol.f[sel])
    dgamma = -root * gamma * sol.fp[sel] / sol.data.F(sol.r[sel])
    if not (np.all(np.diff(gamma) > 0) and np.all(dgamma > 0)):
        raise DecayError("γ is not strictly increasing in τ")
    alpha1 = float(np.max(np.maximum(gamma / tau, tau / gamma)))
    alpha2 = float(np.max(np.maximum(dgamma, 1 / dgamma)))
    return FoliationC(sol, root, alpha1, alpha2, (lo, hi))


def cylinder_rows(cg, consts):
    """CSV rows (z, u, u', u e^{√λ z}, lower, upper) on the fit window."""
    root = math.sqrt(cg.lam)
    z0, z1 = consts.window
    sel = (cg.z >= z0) & (cg.z <= z1)
    z, u, du = cg.z[sel], cg.u[sel], cg.du[sel]
    w = np.exp(root * z)
    return np.column_stack([z, u, du, u * w, u * w - consts.C2, consts.C1 - u * w])

