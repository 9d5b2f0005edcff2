r"""The radial harmonic spinor on the Jang slice and its energy integrals.

On ḡ = F_s^2 dr^2 + r^2 dOmega^2 (F_s = sqrt(ḡ_rr)) the spinor

    ψ = c1 e^{iφ/2} (cos θ/2, -sin θ/2)^T h(r) + c2 e^{-iφ/2} (sin θ/2, cos θ/2)^T h(r)

is harmonic when r h' = (F_s - 1) h, i.e. h(r) = exp(-∫_r^∞ (F_s - 1)/s ds)
with h(∞) = 1, and |ψ| = h for |c1|^2 + |c2|^2 = 1.

The frame computation gives |∇̄ψ|^2 = (3/2) h'^2/F_s^2: the radial
derivative contributes h'^2/F_s^2 and each angular direction
h^2 (1 - 1/F_s)^2/(4 r^2) = h'^2/(4 F_s^2). With dV = 4π r^2 F_s dr the
energies per 4π are therefore

    E(r_lo) = ∫_{r_lo}^∞ (r^2/F_s) h'^2 dr           (Dirichlet energy of |ψ|)
    full(r_lo) = (3/2) E(r_lo) + r_lo C_{r_lo} h(r_lo)^2/2,

the second term being sqrt(π/|S_r|) C_r ∫_{S_r}|ψ|^2/4π. ``weight="sqrt"``
evaluates the Dirichlet integral with the weight r^2/sqrt(F_s) instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import solve_ivp

from .foliation import representable_point
from .penrose import c_coefficient
from .radial_data import DataError
from .slice_geometry import induced_metric


__all__ = [
    "SpinorError",
    "RadialSpinorProfile",
    "SPINOR_COLUMNS",
    "PAULI",
    "h_profile",
    "boundary_dirac_eigenvalue",
    "dirichlet_energy",
    "full_spinor_energy",
    "extrapolate_limit",
    "frame_check",
    "DEFAULT_OFFSETS",
    "EnergyResult",
]

SPINOR_COLUMNS = ("r", "h", "hprime", "integrand_dirichlet", "integrand_full")

# r_lo - r_h in units of r_h/2 (the mass for Schwarzschild)
DEFAULT_OFFSETS = (1e-4, 1e-5, 1e-6)

# Clifford representation e1, e2, e3 of the frame (e_i^2 = -1)
PAULI = (
    np.array([[0, 1j], [1j, 0]]),
    np.array([[0, 1], [-1, 0]], dtype=complex),
    np.array([[1j, 0], [0, -1j]]),
)


class SpinorError(RuntimeError):
    """Slice metric not asymptotically flat, or the integration failed."""


@dataclass(frozen=True)
class RadialSpinorProfile:
    """h on the slice, with the energy integrals carried along.

    ``r`` is the sample grid; ``h``, ``hprime``, ``F_slice`` the values on it.
    The dense solution gives log h and the two Dirichlet integrals at any
    radius between ``r[0]`` and ``r[-1]``.
    """

    r: np.ndarray
    h: np.ndarray
    hprime: np.ndarray
    F_slice: np.ndarray
    r_h: float
    tail_mass: float
    _ode: object = field(repr=False, compare=False, default=None)
    _F: object = field(repr=False, compare=False, default=None)

    def _state(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < self.r[0] * (1 - 1e-15)) or np.any(r > self.r[-1] * (1 + 1e-15)):
            raise SpinorError("radius outside the spinor grid")
        t = np.clip(np.log(r - self.r_h), self._ode.t[-1], self._ode.t[0])
        return self._ode.sol(t)

    def h_at(self, r):
        return np.exp(self._state(r)[0])

    def energy_at(self, r, weight="volume"):
        return self._state(r)[1 if weight == "volume" else 2]

    def ode_residual(self, step=1e-3):
        """max |r h'/h - (F_s - 1)| (r - r_h)/r over the interior grid.

        d log h/dt comes from a 5-point difference of the dense solution in
        t = ln(r - r_h), so this measures the integration, not the grid.
        """
        t = np.log(self.r - self.r_h)[2:-2]
        t = t[(t - 2 * step > self._ode.t[-1]) & (t + 2 * step < self._ode.t[0])]
        L = lambda x: self._ode.sol(x)[0]
        dlog = (L(t - 2 * step) - 8 * L(t - step) + 8 * L(t + step) - L(t + 2 * step)) / (12 * step)
        r, delta = representable_point(self.r_h, np.exp(0.5 * t))
        expected = (self._F(r) - 1) * delta / r
        return float(np.max(np.abs(dlog - expected)))

    def rows(self):
        dirichlet = self.r**2 / self.F_slice * self.hprime**2
        return np.column_stack([self.r, self.h, self.hprime, dirichlet, 1.5 * dirichlet])


def _slice_factor(data, sol):
    def F_s(r):
        return np.sqrt(induced_metric(data, sol, np.atleast_1d(r)))
    return F_s


def h_profile(data, sol, per_decade=50, delta_min_ratio=1e-8, R_ratio=5e7):
    """h(r) with h(∞) = 1 by integration of log h in t = ln(r - r_h).

    The system (log h, E_volume, E_sqrt) is integrated inward from R =
    R_ratio r_h; beyond R the tails use F_s - 1 ~ m/r (m fitted at R), so
    log h(R) = -m/R and both energies start at m^2/R. Coefficients are
    evaluated at the representable radius r~ = fl(r_h + e^t) with the offset
    r~ - r_h, keeping the product (F_s - 1)(r - r_h) consistent at the horizon.
    The inner end is delta_min_ratio r_h, or the innermost offset of the
    blowup solution when that is larger.
    """
    r_h = sol.r_h if sol is not None else data.r_min
    F_s = _slice_factor(data, sol)
    R = R_ratio * r_h
    m = R * (float(F_s(R)[0]) - 1.0)
    if not abs(m) < 1e-2 * R:
        raise SpinorError("slice metric does not approach the flat metric")

    def rhs(t, y):
        r, delta = representable_point(r_h, math.exp(0.5 * t))
        r = float(r)
        delta = float(delta)
        Fs = float(F_s(r)[0])
        h2 = math.exp(2 * y[0])
        dirichlet = (Fs - 1) ** 2 * h2 * delta
        return [(Fs - 1) * delta / r, -dirichlet / Fs, -dirichlet / math.sqrt(Fs)]

    delta_min = delta_min_ratio * r_h
    if sol is not None:
        delta_min = max(delta_min, 1.001 * sol.inner_offset)
    t0, t1 = math.log(R - r_h), math.log(delta_min)
    y0 = [-m / R, m * m / R, m * m / R]
    ode = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    if not ode.success:
        raise SpinorError(f"spinor profile integration failed: {ode.message}")

    decades = (t0 - t1) / math.log(10)
    delta = np.geomspace(delta_min, R - r_h, int(decades * per_decade) + 1)
    r = np.unique(r_h + delta)
    r = r[r > r_h]
    Fv = F_s(r)
    h = np.exp(ode.sol(np.log(r - r_h))[0])
    hprime = (Fv - 1) * h / r
    return RadialSpinorProfile(r, h, hprime, Fv, float(r_h), float(m), ode, F_s)


def boundary_dirac_eigenvalue(r0):
    """Eigenvalue -1/r0 of the boundary Dirac operator on the round sphere S_r0."""
    if not r0 > 0:
        raise DataError("radius must be positive")
    return -1.0 / r0


def extrapolate_limit(values, offsets):
    """Limit of E(δ) as δ -> 0 from three samples at geometric offsets.

    Assumes E(δ) = E0 + a δ^p (Aitken's Δ² step); returns (E0, p).
    """
    e1, e2, e3 = values
    d1, d2 = e1 - e2, e2 - e3
    ratio = offsets[0] / offsets[1]
    if d2 == 0.0 or d1 / d2 <= 0:
        return e3, float("nan")
    q = d1 / d2
    return e3 - d2 / (q - 1), math.log(q) / math.log(ratio)


@dataclass(frozen=True)
class EnergyResult:
    limit: float
    values: tuple
    radii: tuple
    order: float

    def to_dict(self):
        return {"limit": self.limit, "values": list(self.values), "r_lo": list(self.radii),
                "order": self.order}


def _radii(profile, offsets):
    return tuple(profile.r_h + 0.5 * profile.r_h * d for d in offsets)


def dirichlet_energy(profile, r_lo=None, weight="volume", offsets=DEFAULT_OFFSETS):
    """∫_{r_lo}^∞ (r^2/F_s) h'^2 dr, or its r_lo -> r_h limit when r_lo is None."""
    if weight not in ("volume", "sqrt"):
        raise DataError(f"unknown weight {weight!r}")
    if r_lo is not None:
        return float(profile.energy_at(r_lo, weight)[0])
    radii = _radii(profile, offsets)
    values = tuple(float(profile.energy_at(x, weight)[0]) for x in radii)
    limit, order = extrapolate_limit(values, offsets)
    return EnergyResult(limit, values, radii, order)


def full_spinor_energy(profile, data, sol, r_lo=None, offsets=DEFAULT_OFFSETS):
    """(3/2) E(r_lo) + r_lo C h(r_lo)^2/2 (per 4π), or its limit when r_lo is None."""
    def at(x):
        C = float(c_coefficient(data, sol, x))
        h = float(profile.h_at(x)[0])
        return 1.5 * float(profile.energy_at(x)[0]) + 0.5 * x * C * h * h

    if r_lo is not None:
        return at(r_lo)
    radii = _radii(profile, offsets)
    values = tuple(at(x) for x in radii)
    limit, order = extrapolate_limit(values, offsets)
    return EnergyResult(limit, values, radii, order)


def _spinor_and_derivatives(h, dh, theta, phi, c1, c2):
    """ψ and its coordinate derivatives (∂_r, ∂_θ, ∂_φ) at one point."""
    a = c1 * np.exp(0.5j * phi) * np.array([math.cos(theta / 2), -math.sin(theta / 2)])
    b = c2 * np.exp(-0.5j * phi) * np.array([math.sin(theta / 2), math.cos(theta / 2)])
    a_t = c1 * np.exp(0.5j * phi) * np.array([-math.sin(theta / 2), -math.cos(theta / 2)]) / 2
    b_t = c2 * np.exp(-0.5j * phi) * np.array([math.cos(theta / 2), -math.sin(theta / 2)]) / 2
    psi = (a + b) * h
    return psi, (a + b) * dh, (a_t + b_t) * h, (0.5j * a - 0.5j * b) * h


def frame_check(profile, r, theta, phi, c1=1.0, c2=0.0):
    """(|Dψ|/|∇̄ψ|, |∇̄ψ|^2, (3/2) h'^2/F_s^2) at one point, from the frame.

    Orthonormal frame e1 = ∂_θ/r, e2 = ∂_φ/(r sin θ), e3 = ∂_r/F_s with
    connection forms ω13 = ω1/(r F_s), ω23 = ω2/(r F_s), ω12 = -cot θ ω2/r,
    and ∇ = d - (1/2)(ω12 e1e2 + ω13 e1e3 + ω23 e2e3).
    """
    e1, e2, e3 = PAULI
    Fs = float(profile._F(r)[0])
    h = float(profile.h_at(r)[0])
    dh = (Fs - 1) * h / r
    psi, d_r, d_t, d_p = _spinor_and_derivatives(h, dh, theta, phi, c1, c2)
    nabla1 = d_t / r - (1 / (2 * r * Fs)) * (e1 @ e3 @ psi)
    nabla2 = (d_p / (r * math.sin(theta)) + (math.cos(theta) / math.sin(theta) / (2 * r)) * (e1 @ e2 @ psi)
              - (1 / (2 * r * Fs)) * (e2 @ e3 @ psi))
    nabla3 = d_r / Fs
    D = e1 @ nabla1 + e2 @ nabla2 + e3 @ nabla3
    density = sum(float(np.vdot(v, v).real) for v in (nabla1, nabla2, nabla3))
    scale = math.sqrt(density) if density > 0 else 1.0
    return float(np.linalg.norm(D)) / scale, density, 1.5 * dh * dh / (Fs * Fs)

