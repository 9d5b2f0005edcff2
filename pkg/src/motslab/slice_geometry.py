r"""Geometry of the Jang slice: the graph of f in M x R with metric g + df^2.

For radial data g = F^2 dr^2 + r^2 dOmega^2 and a radial graph f(r) the
slice metric is ḡ = G^2 dr^2 + r^2 dOmega^2 with G^2 = F^2 + f'^2, and

    |∇f|^2 = f'^2/F^2,   W = sqrt(1 + |∇f|^2) = G/F.

The mean curvature H̄ of S_r in the slice and q(ē3) follow from the sphere
quantities (θ^+, tr_S k). The scalar-curvature identity

    R̄ = 16π(μ - J(ω)) + |h - k|^2 + 2|q|^2 - 2 div q

is checked with the two sides computed independently: R̄ from finite
differences of ḡ_rr, the right side from the components of the graph
second fundamental form h = ∇²f/W, of k, and of q_i = f^j (h_ij - k_ij)/W.
Here μ = (R_g + (tr k)^2 - |k|^2)/16π and J = div(k - (tr k) g)/8π.

``sol`` is anything with ``slope(r)`` and ``second_derivative(r)`` (a
:class:`~motslab.jang_radial.RadialJangSolution`), or None for the
horizontal graph f = const.
"""

from __future__ import annotations

from dataclasses import dataclass, astuple
import math

import numpy as np

from .jang_radial import JangSolverError
from .radial_data import DataError


__all__ = [
    "SliceSample",
    "SLICE_COLUMNS",
    "graph_derivatives",
    "induced_metric",
    "mean_curvature_and_q",
    "q_from_definition",
    "scalar_curvature",
    "identity_terms",
    "scalar_identity_residual",
    "dominant_energy_margins",
    "sample_slice",
]

SLICE_COLUMNS = ("r", "gbar_rr", "area", "Hbar", "q_e3", "Rbar", "residual")

# relative step of the 5-point stencils, as a fraction of the distance to
# the inner end of the solution grid
_STENCIL = 1e-2


@dataclass(frozen=True)
class SliceSample:
    r: float
    gbar_rr: float
    area: float
    Hbar: float
    q_e3: float
    Rbar: float
    identity_residual: float

    def row(self):
        return astuple(self)


def _inner_radius(data, sol):
    return getattr(sol, "r_h", data.r_min) if sol is not None else data.r_min


def graph_derivatives(data, sol, r):
    """(r, f', f'') as arrays; zeros for the horizontal graph."""
    r = data.check_radius(np.atleast_1d(np.asarray(r, dtype=float)))
    if sol is None:
        z = np.zeros_like(r)
        return r, z, z
    if np.any(r <= sol.r_h):
        raise JangSolverError("radius outside the solution grid")
    return r, np.asarray(sol.slope(r)), np.asarray(sol.second_derivative(r))


def _shape(r_in, values):
    return values if np.ndim(r_in) else values[0]


def induced_metric(data, sol, r):
    """ḡ_rr = F^2 + f'^2."""
    rr, fp, _ = graph_derivatives(data, sol, r)
    return _shape(r, data.F(rr) ** 2 + fp**2)


def mean_curvature_and_q(data, sol, r):
    """(H̄, q(ē3)) of the slice spheres.

    H̄ = H/W. For spheres with no tangential gradient of f and f' < 0,

        H̄ - q(ē3) = W H + |∇f| tr_S k = W θ^+ - tr_S k/(|∇f| + W),

    from <e3, ē3> = 1/W and <e3, ē4> = ∇_{e3} f/W; q(ē3) is the difference.
    The minus sign on the tr_S k term is the one consistent with the
    definition of q (checked against :func:`q_from_definition`).
    """
    rr, fp, _ = graph_derivatives(data, sol, r)
    F = data.F(rr)
    grad = np.abs(fp) / F
    W = np.sqrt(1 + grad**2)
    ktan = np.broadcast_to(data.k_tan(rr), rr.shape)
    H = 2.0 / (rr * F)
    Hbar = H / W
    combo = W * (ktan + H) - ktan / (grad + W)
    return _shape(r, Hbar), _shape(r, Hbar - combo)


def _components(data, rr, fp, fpp):
    """Coordinate components of h, k and q on the slice (radial, angular)."""
    F = data.F(rr)
    dF = data.dF(rr)
    W = np.sqrt(1 + (fp / F) ** 2)
    # Hessian of f in g: f'' - Γ^r_rr f', and -Γ^r_θθ f' with Γ^r_θθ = -r/F^2
    h_rr = (fpp - dF / F * fp) / W
    h_ang = rr * fp / F**2 / W  # per unit of the round metric dOmega^2
    k_rr = F**2 * np.broadcast_to(data.k_nn(rr), rr.shape)
    k_ang = rr**2 * np.broadcast_to(data.k_tan(rr), rr.shape) / 2
    q_r = (fp / F**2) * (h_rr - k_rr) / W
    G2 = F**2 + fp**2
    return dict(F=F, dF=dF, W=W, G2=G2, h_rr=h_rr, h_ang=h_ang, k_rr=k_rr, k_ang=k_ang, q_r=q_r)


def q_from_definition(data, sol, r):
    """q(ē3) = q_r/sqrt(ḡ_rr) from q_i = f^j (h_ij - k_ij)/W."""
    rr, fp, fpp = graph_derivatives(data, sol, r)
    c = _components(data, rr, fp, fpp)
    return _shape(r, c["q_r"] / np.sqrt(c["G2"]))


def _step(data, sol, r):
    r0 = _inner_radius(data, sol)
    h = _STENCIL * (r - r0)
    if np.any(r - 2 * h <= r0):
        raise JangSolverError("stencil leaves the solution grid")
    return h


def _d1(fun, r, h):
    return (fun(r - 2 * h) - 8 * fun(r - h) + 8 * fun(r + h) - fun(r + 2 * h)) / (12 * h)


def scalar_curvature(data, sol, r):
    """R̄ of ḡ = G^2 dr^2 + r^2 dOmega^2 from a 5-point stencil of ḡ_rr.

    For this warped product R̄ = (2/r^2)(1 - 1/ḡ_rr) - (2/r) d(1/ḡ_rr)/dr.
    """
    rr = data.check_radius(np.atleast_1d(np.asarray(r, dtype=float)))
    h = _step(data, sol, rr)
    inv = lambda x: 1.0 / induced_metric(data, sol, x)
    R = 2 / rr**2 * (1 - inv(rr)) - 2 / rr * _d1(inv, rr, h)
    return _shape(r, R)


def identity_terms(data, sol, r):
    """Right-hand side pieces of the scalar-curvature identity (arrays).

    Keys: mu16 (16πμ), J16 (16π J(ω)), hk2 (|h - k|^2), q2 (|q|^2),
    divq (div q), rhs.
    """
    rr, fp, fpp = graph_derivatives(data, sol, r)
    c = _components(data, rr, fp, fpp)
    F, dF, G2 = c["F"], c["dF"], c["G2"]
    knn = np.broadcast_to(data.k_nn(rr), rr.shape) * 1.0
    ktan = np.broadcast_to(data.k_tan(rr), rr.shape) * 1.0
    dknn = np.broadcast_to(data.dk_nn(rr), rr.shape) * 1.0
    dktan = np.broadcast_to(data.dk_tan(rr), rr.shape) * 1.0

    R_g = 2 / rr**2 * (1 - 1 / F**2) + 4 * dF / (rr * F**3)
    trk = knn + ktan
    k2 = knn**2 + ktan**2 / 2
    mu16 = R_g + trk**2 - k2
    # div(k - (tr k) g) = (nu(A) + H (A - B)) nu for A nu⊗nu + B (g - nu⊗nu)
    A, dA = -ktan, -dktan
    B = -knn - ktan / 2
    J_nu = dA / F + 2 / (rr * F) * (A - B)
    omega_nu = (fp / F) / c["W"]
    J16 = 2 * J_nu * omega_nu

    # squared norms in ḡ: radial index raised with 1/G^2, angular with 1/r^2
    hk2 = (c["h_rr"] - c["k_rr"]) ** 2 / G2**2 + 2 * (c["h_ang"] - c["k_ang"]) ** 2 / rr**4
    q2 = c["q_r"] ** 2 / G2

    h = _step(data, sol, rr)
    flux = lambda x: x**2 * q_from_definition(data, sol, x)
    divq = _d1(flux, rr, h) / (np.sqrt(G2) * rr**2)

    rhs = mu16 - J16 + hk2 + 2 * q2 - 2 * divq
    return dict(mu16=mu16, J16=J16, hk2=hk2, q2=q2, divq=divq, rhs=rhs)


def scalar_identity_residual(data, sol, r):
    """(residual, R̄) with residual = R̄ - right side of the identity."""
    Rbar = np.atleast_1d(scalar_curvature(data, sol, r))
    rhs = identity_terms(data, sol, r)["rhs"]
    return _shape(r, Rbar - rhs), _shape(r, Rbar)


def dominant_energy_margins(data, sol, r):
    """(R̄ - 2 div q - 2|q|^2, R̄ + 2 div q - 2|q|^2) on the radii r.

    The identity gives R̄ + 2 div q - 2|q|^2 = 16π(μ - J(ω)) + |h - k|^2,
    which is nonnegative under the dominant energy condition; the first
    margin is the same combination with the opposite sign of div q and has
    no sign in general.
    """
    Rbar = np.atleast_1d(scalar_curvature(data, sol, r))
    t = identity_terms(data, sol, r)
    minus = Rbar - 2 * t["divq"] - 2 * t["q2"]
    plus = Rbar + 2 * t["divq"] - 2 * t["q2"]
    return _shape(r, minus), _shape(r, plus)


def sample_slice(data, sol, r):
    """SliceSample records on the radii r."""
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    if rr.size == 0:
        raise DataError("no radii requested")
    g = induced_metric(data, sol, rr)
    Hbar, q = mean_curvature_and_q(data, sol, rr)
    res, Rbar = scalar_identity_residual(data, sol, rr)
    return [SliceSample(*map(float, row))
            for row in zip(rr, g, 4 * math.pi * rr**2, Hbar, q, Rbar, res)]
