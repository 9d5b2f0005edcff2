r"""Barrier families for blowup solutions near a strictly stable MOTS.

All barriers are profiles phi(s) of the foliation parameter s (Foliation B,
lapse beta = 1 in spherical symmetry). Jang's operator on such a profile is
evaluated through the chart by the chain rule,

    f' = phi'(s) F(r),   f'' = phi''(s) F(r)^2 + phi'(s) F'(r),

at representable radii r with the tabulated s(r), so the sign of J is
probed exactly at the sampled points.

Three families:

* ``w_eps``: w_eps(s) = -log(s - eps), a supersolution on (eps, (1+alpha) eps];
* ``build_W``: the iterated piecewise-log upper bound W(s);
* ``v_family``: v_{a,gamma}(s) = (1/sqrt(lambda)) int_s^{s_ref} x^-gamma dx + a s,
  a supersolution for gamma in (1, 5/4) and a subsolution for gamma in (3/4, 1)
  once a and the range (0, s_2] or (0, s_3] are fixed.

The existence statements are turned into grid certificates: each search
returns the certified range together with the worst sampled value.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
import math

import numpy as np

from .jang_radial import jang_operator
from .radial_data import DataError, theta_plus


__all__ = [
    "BarrierSpec",
    "BarrierViolation",
    "IteratedBarrier",
    "EpsilonCertificate",
    "ExpansionReport",
    "BarrierConstants",
    "SandwichReport",
    "w_eps",
    "alpha_for",
    "build_W",
    "v_family",
    "v_derivatives",
    "profile_operator",
    "certify_w_eps",
    "expansion_check",
    "find_constants",
    "sandwich_check",
    "upper_bound_check",
    "SUPER_GAMMAS",
    "SUB_GAMMAS",
]

SUPER_GAMMAS = (1.01, 1.05, 1.1, 1.2, 1.24)
SUB_GAMMAS = (0.76, 0.8, 0.9, 0.95, 0.99)


class BarrierViolation(RuntimeError):
    """A barrier inequality fails at a sampled point.

    ``where`` holds the offending values, e.g. {"s": ..., "gamma": ...}.
    """

    def __init__(self, message, **where):
        super().__init__(f"{message}: " + ", ".join(f"{k}={v!r}" for k, v in where.items()))
        self.where = where


# ---------------------------------------------------------------------------
# Families


@dataclass(frozen=True)
class BarrierSpec:
    """One member of a barrier family with its validity range.

    kind is "super_log" (params eps, alpha), "iterated_W" (d, eps0, alpha)
    or "power" (a, gamma, s_ref); role is "super" or "sub". ``anchor`` is the
    vertical translation applied at the upper end of ``s_range``.
    """

    kind: str
    role: str
    params: dict
    lam: float
    s_range: tuple
    anchor: float = 0.0

    def __post_init__(self):
        if self.kind == "super_log":
            eps, alpha = self.params["eps"], self.params["alpha"]
            lo, hi = self.s_range
            if lo < eps or hi > (1 + alpha) * eps * (1 + 1e-12):
                raise DataError("super_log is defined only on (eps, (1 + alpha) eps]")
        elif self.kind == "power":
            g = self.params["gamma"]
            if self.role == "super" and not 1 < g < 1.25:
                raise DataError("power super barrier requires gamma in (1, 5/4)")
            if self.role == "sub" and not 0.75 < g < 1:
                raise DataError("power sub barrier requires gamma in (3/4, 1)")
        elif self.kind != "iterated_W":
            raise DataError(f"unknown barrier kind {self.kind!r}")

    def __call__(self, s):
        p = self.params
        if self.kind == "super_log":
            eps = p["eps"]
            hi = self.s_range[1]
            return w_eps(eps, s) - w_eps(eps, hi) + self.anchor
        if self.kind == "power":
            hi = self.s_range[1]
            return (v_family(p["a"], p["gamma"], self.lam, s, hi)
                    - v_family(p["a"], p["gamma"], self.lam, hi, hi) + self.anchor)
        return build_W(p["d"], p["eps0"], p["alpha"], self.anchor)(s)

    def to_dict(self):
        return asdict(self)


def w_eps(eps, s):
    """w_eps(s) = -log(s - eps) for s > eps."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= eps):
        raise DataError("w_eps requires s > eps")
    value = -np.log(s - eps)
    return float(value) if value.ndim == 0 else value


def alpha_for(lam):
    """Half the critical alpha of (1 - lam)(1 + alpha) < 1 - lam/2 (1 for lam >= 1)."""
    if not lam > 0:
        raise DataError("lambda must be positive")
    if lam >= 1:
        return 1.0
    return 0.5 * (lam / 2) / (1 - lam)


def v_family(a, gamma, lam, s, s_ref):
    """v_{a,gamma}(s) = (1/sqrt(lam)) int_s^{s_ref} x^-gamma dx + a s (log limit at gamma = 1)."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0) or np.any(s > s_ref * (1 + 1e-12)):
        raise DataError("v_family requires 0 < s <= s_ref")
    if gamma == 1:
        integral = np.log(s_ref / s)
    else:
        # (s^(1-g) - s_ref^(1-g))/(g - 1), written with expm1 so it stays
        # accurate as gamma -> 1
        e = 1 - gamma
        integral = s_ref**e * np.expm1(e * np.log(s / s_ref)) / (gamma - 1)
    value = integral / math.sqrt(lam) + a * s
    return float(value) if value.ndim == 0 else value


def v_derivatives(a, gamma, lam, s):
    """(v', v'') of v_{a,gamma}."""
    s = np.asarray(s, dtype=float)
    return -s**-gamma / math.sqrt(lam) + a, gamma * s ** (-gamma - 1) / math.sqrt(lam)


@dataclass(frozen=True)
class IteratedBarrier:
    """The piecewise-log upper bound W(s) on (0, (1 + alpha) eps0].

    Breakpoints b_n = (1 + d alpha)^n/(1 + alpha)^(n-1) eps0; on [b_(n+1), b_n)
    W(s) = log(alpha e_n/(s - e_n)) + W(b_n) with e_n = b_n/(1 + alpha), and
    W(b_n) = -n log d + anchor.
    """

    d: float
    eps0: float
    alpha: float
    anchor: float

    @property
    def ratio(self):
        return (1 + self.d * self.alpha) / (1 + self.alpha)

    def breakpoint(self, n):
        return (1 + self.alpha) * self.eps0 * self.ratio**n

    def value_at_breakpoint(self, n):
        return -n * math.log(self.d) + self.anchor

    @property
    def asymptotic_coefficient(self):
        """lim W(s)/(-log s) = log(1/d)/log((1 + alpha)/(1 + d alpha))."""
        return math.log(1 / self.d) / math.log(1 / self.ratio)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        b0 = self.breakpoint(0)
        if np.any(s <= 0) or np.any(s > b0 * (1 + 1e-12)):
            raise DataError("W is defined on (0, (1 + alpha) eps0]")
        # segment index n with b_(n+1) <= s < b_n (n = 0 includes s = b_0)
        n = np.floor(np.log(np.minimum(s, b0) / b0) / math.log(self.ratio)).astype(int)
        n = np.maximum(n, 0)
        # guard the floor against rounding at breakpoints
        n = np.where(s < self.breakpoint(n + 1), n + 1, n)
        n = np.where((n > 0) & (s >= self.breakpoint(n)), n - 1, n)
        e = self.breakpoint(n) / (1 + self.alpha)
        value = np.log(self.alpha * e / (s - e)) + self.value_at_breakpoint(n)
        return float(value) if value.ndim == 0 else value


def build_W(d, eps0, alpha, sup_anchor):
    """Iterated upper bound W for ratio d in (0, 1)."""
    if not 0 < d < 1:
        raise DataError("d must lie in (0, 1)")
    if not (eps0 > 0 and alpha > 0):
        raise DataError("eps0 and alpha must be positive")
    return IteratedBarrier(float(d), float(eps0), float(alpha), float(sup_anchor))


# ---------------------------------------------------------------------------
# Operator on profiles


def profile_operator(data, chart, s, dphi, ddphi):
    """J[phi] at the representable points nearest the requested s.

    ``dphi`` and ``ddphi`` are callables of the actual s values. Returns
    (s_actual, r, J).
    """
    r, s_act = chart.points_at(s)
    d1 = dphi(s_act)
    d2 = ddphi(s_act)
    F = data.F(r)
    fp = d1 * F
    fpp = d2 * F**2 + d1 * data.dF(r)
    return s_act, r, jang_operator(data, r, fp, fpp)


# ---------------------------------------------------------------------------
# w_eps certificate


@dataclass(frozen=True)
class EpsilonCertificate:
    """eps0 with J[w_eps] < 0 on (eps, (1 + alpha) eps] for all sampled eps <= eps0."""

    eps0: float
    alpha: float
    eps_min: float
    n_eps: int
    n_s: int
    worst: float  # max of J/eps over the certified samples (negative)

    def to_dict(self):
        return asdict(self)


def certify_w_eps(data, chart, alpha=None, n_eps=1000, n_s=100, eps_min_ratio=1e-4):
    """Grid certificate for the log supersolutions w_eps.

    eps runs over ``n_eps`` log-spaced values in [eps_min_ratio s_bar,
    s_bar/(1 + alpha)] (s_bar = chart.s_max), and for each eps ``n_s`` points
    s = eps (1 + alpha x), x log-spaced in [1e-2, 1]. eps0 is the largest
    sampled eps below which every sample has J < 0.
    """
    alpha = alpha_for(chart.lam) if alpha is None else float(alpha)
    s_bar = chart.s_max
    eps = np.geomspace(eps_min_ratio * s_bar, s_bar / (1 + alpha), n_eps)
    x = np.geomspace(1e-2, 1.0, n_s)
    E, X = np.meshgrid(eps, x, indexing="ij")
    S = E * (1 + alpha * X)
    Es = E.ravel()
    s_act, _, J = profile_operator(data, chart, S.ravel(), lambda s: -1.0 / (s - Es),
                                   lambda s: 1.0 / (s - Es) ** 2)
    inside = (s_act > Es) & (s_act <= Es * (1 + alpha))
    passed = ((J < 0) | ~inside).reshape(E.shape)
    ok = passed.all(axis=1)
    if not ok[0]:
        i = int(np.argmin(passed[0]))
        raise BarrierViolation("w_eps is not a supersolution at the smallest eps",
                               eps=float(eps[0]), s=float(S[0, i]))
    k = len(ok) if ok.all() else int(np.argmin(ok))
    sel = (np.arange(E.size) < k * n_s) & inside
    worst = float(np.max(J[sel] / Es[sel]))
    return EpsilonCertificate(float(eps[k - 1]), alpha, float(eps[0]), k, n_s, worst)


# ---------------------------------------------------------------------------
# Expansion of sigma^3 J[v_{a,gamma}]


@dataclass(frozen=True)
class ExpansionReport:
    gamma: float
    a: float
    order: float
    max_ratio: float
    ratio_small: float  # max ratio over the lowest decade of the window
    ratio_large: float  # max ratio over the highest decade
    window: tuple

    def to_dict(self):
        return asdict(self)


def _sigma3(a, gamma, lam, s):
    return ((a * a + 1) * s ** (2 * gamma) - 2 * a / math.sqrt(lam) * s**gamma + 1 / lam) ** 1.5


def expansion_terms(data, r, s, a, gamma, lam):
    """Displayed terms of the expansion of sigma^3 J[v_{a,gamma}] (beta = 1)."""
    sl = math.sqrt(lam)
    th = theta_plus(data, r)
    knn = data.k_nn(r)
    P = data.k_tan(r)
    return (-s / sl + gamma / sl * s ** (2 * gamma - 1) - (th - lam * s) / (lam * sl)
            + 3 * a * s ** (gamma + 1) - (knn + P / 2) / sl * s ** (2 * gamma))


def expansion_check(data, chart, a, gamma, window=(1e-6, 1e-2), n=400):
    """sup |sigma^3 J[v] - expansion| / s^q over a log grid, q = min(3g, 2g+1, g+2, 3)."""
    if not 0.8 <= gamma <= 1.2:
        raise DataError("expansion is checked for gamma in [0.8, 1.2]")
    lam = chart.lam
    s_req = np.geomspace(window[0], window[1], n)
    s, r, J = profile_operator(data, chart, s_req, lambda s: v_derivatives(a, gamma, lam, s)[0],
                               lambda s: v_derivatives(a, gamma, lam, s)[1])
    q = min(3 * gamma, 2 * gamma + 1, gamma + 2, 3.0)
    rem = _sigma3(a, gamma, lam, s) * J - expansion_terms(data, r, s, a, gamma, lam)
    ratio = np.abs(rem) / s**q
    lo = s <= window[0] * 10
    hi = s >= window[1] / 10
    return ExpansionReport(float(gamma), float(a), q, float(np.max(ratio)),
                           float(np.max(ratio[lo])), float(np.max(ratio[hi])), tuple(window))


# ---------------------------------------------------------------------------
# Constants and sandwich


@dataclass(frozen=True)
class BarrierConstants:
    """Explicit barrier constants with their grid certificates.

    a_super < 0 and a_sub > 0 follow the closed formulas; s2 (s3) is the
    largest sampled s with J[v_{a_super,gamma}] <= 0 (J[v_{a_sub,gamma}] >= 0)
    at every sample below it for all sampled gamma, capped by the chart
    region s_bar where (lambda, Lambda) are certified. s0 = min(s2, s3).
    """

    lam: float
    Lambda: float
    c1: float
    c2: float
    a_super: float
    s2: float
    a_sub: float
    s3: float
    s0: float
    s_bar: float
    super_gammas: tuple
    sub_gammas: tuple
    worst_super: float  # max sampled J (<= 0) on (0, s2]
    worst_sub: float  # min sampled J (>= 0) on (0, s3]
    samples: int

    @property
    def a(self):
        """Single constant of the two-sided estimate: max(|a_super|, a_sub)."""
        return max(-self.a_super, self.a_sub)

    def to_dict(self):
        d = asdict(self)
        d["a"] = self.a
        return d


def _certified_range(s, J, sign, gammas):
    """Largest prefix of the s grid on which sign * J >= 0 for all gammas."""
    good = np.all(sign * J >= 0, axis=0)
    if not good[0]:
        g = int(np.argmax(sign * J[:, 0] < 0))
        raise BarrierViolation("barrier sign fails at the smallest sampled s",
                               s=float(s[0]), gamma=gammas[g])
    k = len(good) if good.all() else int(np.argmin(good))
    return k


def find_constants(data, chart, s_min_ratio=1e-6, per_decade=100,
                   super_gammas=SUPER_GAMMAS, sub_gammas=SUB_GAMMAS):
    """a_super, s2, a_sub, s3 and s0 for the chart region (0, s_bar]."""
    lam, Lambda, beta = chart.lam, chart.Lambda, chart.beta
    if not math.isfinite(Lambda):
        raise DataError("chart has no Lambda; build it with build_chart")
    s_bar = chart.s_max
    n = int(per_decade * math.log10(1 / s_min_ratio)) + 1
    s_req = np.geomspace(s_min_ratio * s_bar, s_bar, n)
    r, s = chart.points_at(s_req)
    tk = -beta * (np.broadcast_to(data.k_nn(r), r.shape) + np.broadcast_to(data.k_tan(r), r.shape) / 2)
    c1, c2 = float(np.max(tk)), float(np.min(tk))
    sl = math.sqrt(lam)
    a_super = -(5 * Lambda / (4 * lam * beta) + abs(c1) + 1) / (3 * sl)
    a_sub = 2 / (3 * math.sqrt(3 * lam)) * (1 + 4 / 3 * abs(c2) + Lambda / (lam * beta))

    def scan(a, gammas):
        rows = []
        for g in gammas:
            _, _, J = profile_operator(data, chart, s, lambda x: v_derivatives(a, g, lam, x)[0],
                                       lambda x: v_derivatives(a, g, lam, x)[1])
            rows.append(J)
        return np.array(rows)

    J_sup = scan(a_super, super_gammas)
    J_sub = scan(a_sub, sub_gammas)
    k2 = _certified_range(s, J_sup, -1, super_gammas)
    k3 = _certified_range(s, J_sub, +1, sub_gammas)
    s2, s3 = float(s[k2 - 1]), float(s[k3 - 1])
    return BarrierConstants(
        lam=lam, Lambda=Lambda, c1=c1, c2=c2, a_super=a_super, s2=s2, a_sub=a_sub, s3=s3,
        s0=min(s2, s3), s_bar=s_bar, super_gammas=tuple(super_gammas),
        sub_gammas=tuple(sub_gammas), worst_super=float(np.max(J_sup[:, :k2])),
        worst_sub=float(np.min(J_sub[:, :k3])), samples=int(s.size),
    )


@dataclass(frozen=True)
class SandwichReport:
    """Two-sided log estimate on the blowup solution for s <= s1.

    upper(s) = f(s1) - log(s/s1)/sqrt(lam) + a_super (s - s1),
    lower(s) = f(s1) - log(s/s1)/sqrt(lam) + a_sub (s - s1);
    margins are upper - f and f - lower (both >= 0, 0 at s = s1). The
    gradient margin is the worst slack of
    1/(sqrt(lam) s) - a <= |df/ds| <= 1/(sqrt(lam) s) + a.
    """

    s1: float
    samples: int
    upper_margin: float
    lower_margin: float
    gradient_margin: float
    a: float

    @property
    def holds(self):
        return min(self.upper_margin, self.lower_margin, self.gradient_margin) >= 0

    def to_dict(self):
        d = asdict(self)
        d["holds"] = self.holds
        return d


def sandwich_check(sol, consts, chart=None, s1=None, strict=True):
    """Verify the barrier sandwich and the gradient corollary on the solution grid.

    s1 defaults to the largest grid value of s not above s0/2. With
    ``strict`` a violation raises BarrierViolation with (s, lower, f, upper).
    """
    chart = sol.chart if chart is None else chart
    lam = chart.lam
    s_all = sol.tau
    target = consts.s0 / 2 if s1 is None else float(s1)
    if target > consts.s0 * (1 + 1e-12):
        raise DataError("s1 must not exceed s0")
    idx = np.nonzero(s_all <= target)[0]
    if idx.size < 2:
        raise DataError("s1 is not inside the solution grid")
    i1 = int(idx[-1])
    s1 = float(s_all[i1])
    f1 = float(sol.f[i1])
    s = s_all[: i1 + 1]
    f = sol.f[: i1 + 1]
    base = f1 - np.log(s / s1) / math.sqrt(lam)
    upper = base + consts.a_super * (s - s1)
    lower = base + consts.a_sub * (s - s1)
    up_m = upper - f
    lo_m = f - lower
    grad = -sol.fp[: i1 + 1] / sol.data.F(sol.r[: i1 + 1])
    ideal = 1 / (math.sqrt(lam) * s)
    gm = consts.a - np.abs(grad - ideal)
    if strict:
        for margin in (up_m, lo_m):
            if np.any(margin[:-1] < 0):
                j = int(np.argmin(margin[:-1]))
                raise BarrierViolation("sandwich violated", s=float(s[j]), lower=float(lower[j]),
                                       f=float(f[j]), upper=float(upper[j]))
    return SandwichReport(s1=s1, samples=int(s.size - 1), upper_margin=float(np.min(up_m[:-1])),
                          lower_margin=float(np.min(lo_m[:-1])), gradient_margin=float(np.min(gm)),
                          a=consts.a)


def upper_bound_check(sol, W):
    """min of W(s) - f(s) over the solution grid inside (0, (1 + alpha) eps0]."""
    sel = sol.tau <= W.breakpoint(0)
    return float(np.min(W(sol.tau[sel]) - sol.f[sel]))
