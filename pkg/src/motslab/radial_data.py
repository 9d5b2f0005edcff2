r"""Spherically symmetric initial data sets and the geometry of their spheres.

Data (M, g, k) are stored in areal-radius form

    g = F(r)^2 dr^2 + r^2 dOmega^2,

with k represented by the two scalars the radial Jang operator needs: the
normal-normal component k(nu, nu) and the tangential trace tr_{S_r} k. The
coordinate sphere S_r has area 4 pi r^2, mean curvature H = 2/(r F) and
expansions theta_pm = tr_{S_r} k +- H.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math
import warnings

import numpy as np
from scipy.optimize import bisect

from .profile_expr import ProfileDomainError, ProfileExpr, parse


__all__ = [
    "RadialInitialData",
    "SphereGeometry",
    "MassFit",
    "NoMOTSError",
    "DataError",
    "schwarzschild",
    "flat",
    "custom",
    "from_config",
    "sphere_geometry",
    "theta_plus",
    "find_mots",
    "adm_mass",
]


class DataError(ValueError):
    """Invalid initial data specification or evaluation outside the domain."""


class NoMOTSError(RuntimeError):
    """No outermost MOTS was found in the scan range."""


@dataclass(frozen=True)
class RadialInitialData:
    """Spherically symmetric initial data in areal-radius form.

    @param F      radial metric factor, g = F^2 dr^2 + r^2 dOmega^2
    @param k_nn   k(nu, nu)
    @param k_tan  tangential trace tr_{S_r} k
    @param r_min  inner coordinate bound (data live on r > r_min)
    @param label  free-form name used in reports
    """

    F: ProfileExpr
    k_nn: ProfileExpr
    k_tan: ProfileExpr
    r_min: float
    label: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    @cached_property
    def dF(self):
        return self.F.differentiate()

    @cached_property
    def dk_nn(self):
        return self.k_nn.differentiate()

    @cached_property
    def dk_tan(self):
        return self.k_tan.differentiate()

    @property
    def is_time_symmetric(self):
        return _is_zero(self.k_nn) and _is_zero(self.k_tan)

    def check_radius(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= self.r_min):
            raise DataError(f"radius {float(np.min(r))!r} at or below r_min = {self.r_min!r}")
        return r

    def to_config(self):
        """Round-trippable JSON-ready description."""
        if self.label == "schwarzschild":
            return {"family": "schwarzschild", "mass": self.params["mass"]}
        return {
            "family": "custom",
            "F": self.F.source,
            "k_nn": self.k_nn.source,
            "k_tan": self.k_tan.source,
            "r_min": self.r_min,
        }


def _is_zero(e):
    return e.is_constant and e(1.0) == 0.0


@dataclass(frozen=True)
class SphereGeometry:
    """Geometry of the coordinate sphere(s) S_r (scalars or arrays)."""

    r: np.ndarray
    area: np.ndarray
    H: np.ndarray
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    trk: np.ndarray
    k_nn: np.ndarray


@dataclass(frozen=True)
class MassFit:
    """ADM mass from the far-field fit, with the fit residual diagnostic."""

    mass: float
    residual: float
    window: tuple


def schwarzschild(m):
    """Time-symmetric Schwarzschild slice of mass ``m`` in areal radius."""
    m = float(m)
    if not m > 0 or not math.isfinite(m):
        raise DataError(f"Schwarzschild mass must be positive, got {m!r}")
    # sqrt(r/(r - 2m)) equals (1 - 2m/r)^(-1/2); in this form r - 2m is
    # exact near the horizon, so F keeps full relative accuracy there.
    two_m = repr(2.0 * m)
    return RadialInitialData(
        F=parse(f"sqrt(r/(r - {two_m}))"),
        k_nn=parse("0"),
        k_tan=parse("0"),
        r_min=2.0 * m,
        label="schwarzschild",
        params={"mass": m},
    )


def flat(r_min=1.0):
    """Euclidean data (F = 1, k = 0) outside the ball of radius ``r_min``."""
    return RadialInitialData(parse("1"), parse("0"), parse("0"), float(r_min), label="flat")


def custom(F, k_nn="0", k_tan="0", r_min=0.0, label="custom"):
    """Data from profile strings (or already parsed expressions)."""
    exprs = [e if isinstance(e, ProfileExpr) else parse(e) for e in (F, k_nn, k_tan)]
    r_min = float(r_min)
    if not math.isfinite(r_min) or r_min < 0:
        raise DataError(f"r_min must be a finite non-negative number, got {r_min!r}")
    return RadialInitialData(*exprs, r_min=r_min, label=label)


def from_config(entry):
    """Build data from the JSON entry used by the command line front end.

    Accepted forms: ``{"family": "schwarzschild", "mass": 1.0}`` and
    ``{"family": "custom", "F": "...", "k_nn": "...", "k_tan": "...",
    "r_min": 2.0}``. Unknown keys are rejected.
    """
    if not isinstance(entry, dict):
        raise DataError("data entry must be an object")
    family = entry.get("family")
    allowed = {
        "schwarzschild": {"family", "mass"},
        "flat": {"family", "r_min"},
        "custom": {"family", "F", "k_nn", "k_tan", "r_min"},
    }
    if family not in allowed:
        raise DataError(f"unknown data family {family!r}; expected one of {sorted(allowed)}")
    unknown = set(entry) - allowed[family]
    if unknown:
        raise DataError(f"unknown key(s) in data entry: {sorted(unknown)}")
    if family == "schwarzschild":
        if "mass" not in entry:
            raise DataError("schwarzschild family requires 'mass'")
        return schwarzschild(_number(entry["mass"], "mass"))
    if family == "flat":
        return flat(_number(entry.get("r_min", 1.0), "r_min"))
    for key in ("F", "r_min"):
        if key not in entry:
            raise DataError(f"custom family requires {key!r}")
    data = custom(entry["F"], entry.get("k_nn", "0"), entry.get("k_tan", "0"),
                  _number(entry["r_min"], "r_min"))
    _warn_slow_trace_decay(data)
    return data


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"{name!r} must be a number, got {value!r}")
    return float(value)


def _warn_slow_trace_decay(data, R=1e3):
    """Warn when tr k decays no faster than r^-2 (barriers here are local)."""
    if data.is_time_symmetric:
        return
    R = max(R, 10 * data.r_min)
    trk = [abs(data.k_nn(x) + data.k_tan(x)) for x in (R, 10 * R)]
    if trk[0] > 0 and trk[1] > 0 and math.log10(trk[1] / trk[0]) > -2.0:
        warnings.warn("tr k decays no faster than r^-2 in the far field", stacklevel=3)


def sphere_geometry(data, r):
    """Area, mean curvature and expansions of S_r (vectorized in r)."""
    r = data.check_radius(r)
    F = data.F(r)
    if np.any(np.asarray(F) <= 0):
        raise DataError("F must be positive")
    H = 2.0 / (r * F)
    knn = np.broadcast_to(data.k_nn(r), np.shape(r)) * 1.0
    ktan = np.broadcast_to(data.k_tan(r), np.shape(r)) * 1.0
    trk = knn + ktan
    return SphereGeometry(
        r=r, area=4 * np.pi * r**2, H=H,
        theta_plus=ktan + H, theta_minus=ktan - H, trk=trk, k_nn=knn,
    )


def theta_plus(data, r):
    """theta^+ of S_r; r may be an array."""
    r = np.asarray(r, dtype=float)
    return data.k_tan(r) + 2.0 / (r * data.F(r))


def _theta_plus_at_r_min(data):
    """theta^+ at r_min, or None when F has a pole there (H -> 0)."""
    try:
        return float(theta_plus(data, data.r_min))
    except (ProfileDomainError, ZeroDivisionError):
        return None


def find_mots(data, scan_factor=100.0, n=4096):
    """Outermost radius r_h with theta^+(r_h) = 0 and theta^+ > 0 outside.

    The range (r_min, scan_factor r_min] is scanned on ``n`` log-spaced
    points; the last sign change is refined by bisection down to adjacent
    doubles. A pole of F at r_min (H -> 0 there) with theta^+ -> 0 counts as
    a MOTS at r_min.
    """
    if not data.r_min > 0:
        raise NoMOTSError("no MOTS: data have no inner boundary to scan from")
    r = data.r_min * (1.0 + np.logspace(-12, math.log10(scan_factor - 1.0), n))
    th = theta_plus(data, r)
    if th[-1] <= 0:
        raise NoMOTSError("no MOTS: theta^+ is not positive at the outer end of the scan")
    nonpositive = np.nonzero(th <= 0)[0]
    if nonpositive.size:
        i = int(nonpositive[-1])
        if th[i] == 0:
            return float(r[i])
        return float(bisect(lambda x: float(theta_plus(data, x)), r[i], r[i + 1],
                            xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000))
    at_min = _theta_plus_at_r_min(data)
    if at_min is not None:
        if at_min <= 0:
            return float(bisect(lambda x: float(theta_plus(data, x)), data.r_min, r[0],
                                xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000))
        raise NoMOTSError("no MOTS: theta^+ > 0 on the whole scan range")
    if th[0] < 1e-4 * np.max(np.abs(th)) and th[0] < th[1]:
        return float(data.r_min)
    raise NoMOTSError("no MOTS: theta^+ stays away from zero near r_min")


def adm_mass(data, R=1e3, n=64, threshold=1e-6):
    """ADM mass read off from F^2 ~ (1 - 2m/r)^-1 on [R, 4R].

    m(r) = r (1 - F^-2)/2 is fitted by m + b/r + c/r^2; the max deviation of
    that fit is the residual diagnostic.
    """
    R = max(float(R), 10.0 * data.r_min)
    r = np.geomspace(R, 4 * R, n)
    F = data.F(r)
    y = 0.5 * r * (1.0 - 1.0 / F**2)
    basis = np.column_stack([np.ones_like(r), 1 / r, 1 / r**2])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    residual = float(np.max(np.abs(basis @ coef - y)))
    if residual > threshold * max(1.0, abs(coef[0])):
        raise DataError(
            f"not asymptotically Schwarzschildian at declared order (fit residual {residual:.3g})")
    return MassFit(mass=float(coef[0]), residual=residual, window=(R, 4 * R))
