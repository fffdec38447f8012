"""Gas model, pointwise Euler/Navier-Stokes fluxes, the Roe-Pike numerical
flux, and the two exact solutions (supersonic vortex, Taylor-Couette).

State arrays carry the conservative variables (rho, rho u, rho v, E) on the
last axis.  Gradients carry (variable, direction) on the last two axes.
Every kernel here is written so that it also accepts complex input; the
assembly module differentiates them by complex-step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp


class NonphysicalStateError(ValueError):
    """Raised for nonpositive density or pressure; ``state`` holds the offender."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class GasModel:
    """Calorically perfect gas with constant viscosity and zero bulk viscosity."""

    gamma: float = 1.4
    Pr: float = 0.72
    mu: float = 0.0
    Cp: float | None = None

    def __post_init__(self):
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")
        if self.mu < 0:
            raise ValueError("viscosity must be nonnegative")
        if self.Cp is None:
            object.__setattr__(self, "Cp", self.gamma / (self.gamma - 1.0))

    @property
    def R(self):
        return self.Cp * (self.gamma - 1.0) / self.gamma

    @property
    def Cv(self):
        return self.Cp / self.gamma

    @property
    def kappa(self):
        return self.Cp * self.mu / self.Pr

    @property
    def lambda2(self):
        return -2.0 * self.mu / 3.0


@dataclass(frozen=True)
class VortexParams:
    r_i: float = 1.0
    r_o: float = 1.384
    rho_i: float = 1.0
    M_i: float = 2.25


@dataclass(frozen=True)
class CouetteParams:
    r_i: float = 0.5
    r_o: float = 1.0
    T_i: float = 1.0
    omega_i: float = 1.0
    rho_i: float = 1.0

    @property
    def C(self):
        return self.omega_i / (1.0 / self.r_i ** 2 - 1.0 / self.r_o ** 2)


def _re(x):
    return np.real(x)


def cabs(x):
    """abs that stays analytic under complex-step perturbation."""
    return np.where(_re(x) < 0, -x, x)


# --------------------------------------------------------------------------
# State conversions


def primitives(W, gas: GasModel, check=True):
    """(rho, u, v, p, T) from conservative W."""
    W = np.asarray(W)
    rho = W[..., 0]
    u = W[..., 1] / rho
    v = W[..., 2] / rho
    p = (gas.gamma - 1.0) * (W[..., 3] - 0.5 * rho * (u * u + v * v))
    if check:
        bad = (_re(rho) <= 0) | (_re(p) <= 0)
        if np.any(bad):
            idx = np.argwhere(np.atleast_1d(bad))[0]
            raise NonphysicalStateError(
                f"nonphysical state (rho={_re(np.atleast_1d(rho)[tuple(idx)])}, "
                f"p={_re(np.atleast_1d(p)[tuple(idx)])})",
                state=np.atleast_2d(W.reshape(-1, 4))[0] if W.ndim else W)
    T = p / (rho * gas.R)
    return rho, u, v, p, T


def conservative_from_primitives(rho, u, v, p, gas: GasModel):
    rho, u, v, p = np.broadcast_arrays(rho, u, v, p)
    E = p / (gas.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
    return np.stack([rho, rho * u, rho * v, E], axis=-1)


def pressure(W, gas):
    rho = W[..., 0]
    return (gas.gamma - 1.0) * (W[..., 3] - 0.5 * (W[..., 1] ** 2 + W[..., 2] ** 2) / rho)


def sound_speed(W, gas):
    return np.sqrt(gas.gamma * pressure(W, gas) / W[..., 0])


# --------------------------------------------------------------------------
# Physical fluxes


def inviscid_flux(W, gas: GasModel, check=True):
    """F^i with shape (..., 4, 2): rows (mass, x-mom, y-mom, energy)."""
    rho, u, v, p, _ = primitives(W, gas, check=check)
    E = W[..., 3]
    F = np.empty(W.shape + (2,), dtype=np.result_type(W, 1.0))
    F[..., 0, 0] = W[..., 1]
    F[..., 0, 1] = W[..., 2]
    F[..., 1, 0] = W[..., 1] * u + p
    F[..., 1, 1] = W[..., 1] * v
    F[..., 2, 0] = W[..., 2] * u
    F[..., 2, 1] = W[..., 2] * v + p
    F[..., 3, 0] = (E + p) * u
    F[..., 3, 1] = (E + p) * v
    return F


def inviscid_flux_jacobian(W, gas: GasModel):
    """dF^i/dW in closed form, shape (..., 4, 2, 4) indexed [row, dir, col]."""
    g = gas.gamma
    rho, u, v, p, _ = primitives(W, gas, check=False)
    E = W[..., 3]
    H = (E + p) / rho
    q2 = 0.5 * (u * u + v * v)
    A = np.zeros(W.shape[:-1] + (4, 2, 4), dtype=np.result_type(W, 1.0))
    # x direction
    A[..., 0, 0, 1] = 1.0
    A[..., 1, 0, 0] = (g - 1) * q2 - u * u
    A[..., 1, 0, 1] = (3 - g) * u
    A[..., 1, 0, 2] = -(g - 1) * v
    A[..., 1, 0, 3] = g - 1
    A[..., 2, 0, 0] = -u * v
    A[..., 2, 0, 1] = v
    A[..., 2, 0, 2] = u
    A[..., 3, 0, 0] = u * ((g - 1) * q2 - H)
    A[..., 3, 0, 1] = H - (g - 1) * u * u
    A[..., 3, 0, 2] = -(g - 1) * u * v
    A[..., 3, 0, 3] = g * u
    # y direction
    A[..., 0, 1, 2] = 1.0
    A[..., 1, 1, 0] = -u * v
    A[..., 1, 1, 1] = v
    A[..., 1, 1, 2] = u
    A[..., 2, 1, 0] = (g - 1) * q2 - v * v
    A[..., 2, 1, 1] = -(g - 1) * u
    A[..., 2, 1, 2] = (3 - g) * v
    A[..., 2, 1, 3] = g - 1
    A[..., 3, 1, 0] = v * ((g - 1) * q2 - H)
    A[..., 3, 1, 1] = -(g - 1) * u * v
    A[..., 3, 1, 2] = H - (g - 1) * v * v
    A[..., 3, 1, 3] = g * v
    return A


def velocity_temperature_gradients(W, Q, gas: GasModel):
    """Chain rule from conservative gradients Q (..., 4, 2) to grad v (..., 2, 2) and grad T (..., 2)."""
    rho = W[..., 0]
    u = W[..., 1] / rho
    v = W[..., 2] / rho
    grho = Q[..., 0, :]
    gu = (Q[..., 1, :] - u[..., None] * grho) / rho[..., None]
    gv = (Q[..., 2, :] - v[..., None] * grho) / rho[..., None]
    e_int = W[..., 3] / rho - 0.5 * (u * u + v * v)
    ge = ((Q[..., 3, :] - (W[..., 3] / rho)[..., None] * grho) / rho[..., None]
          - u[..., None] * gu - v[..., None] * gv)
    gT = (gas.gamma - 1.0) / gas.R * ge
    gradv = np.stack([gu, gv], axis=-2)  # [component, direction]
    T = (gas.gamma - 1.0) * e_int / gas.R
    return gradv, gT, T


def stress_tensor(gradv, mu):
    """Pi = 2 mu (D - (1/3) div v I) from the velocity gradient [component, direction]."""
    D = 0.5 * (gradv + np.swapaxes(gradv, -1, -2))
    div = gradv[..., 0, 0] + gradv[..., 1, 1]
    Pi = 2.0 * mu * D
    Pi[..., 0, 0] -= 2.0 * mu * div / 3.0
    Pi[..., 1, 1] -= 2.0 * mu * div / 3.0
    return Pi


def viscous_flux(W, Q, gas: GasModel, heat_mask=None):
    """F^v with shape (..., 4, 2).

    The energy row is Pi v + kappa grad T, the sign for which
    div(F^i - F^v) = 0 carries Fourier conduction down the temperature
    gradient.  ``heat_mask`` (broadcastable to the point shape) scales the
    conduction term; 0 enforces an adiabatic wall.
    """
    rho = W[..., 0]
    u = W[..., 1] / rho
    v = W[..., 2] / rho
    gradv, gT, _ = velocity_temperature_gradients(W, Q, gas)
    Pi = stress_tensor(gradv, gas.mu)
    heat = gas.kappa * gT
    if heat_mask is not None:
        heat = heat * np.asarray(heat_mask)[..., None]
    F = np.zeros(W.shape + (2,), dtype=np.result_type(W, Q, 1.0))
    F[..., 1, :] = Pi[..., 0, :]
    F[..., 2, :] = Pi[..., 1, :]
    F[..., 3, :] = Pi[..., 0, :] * u[..., None] + Pi[..., 1, :] * v[..., None] + heat
    return F


# --------------------------------------------------------------------------
# Roe-Pike numerical flux


def roe_pike_flux(WL, WR, n, gas: GasModel, entropy_fix=0.1, check=True):
    """Roe-Pike upwind flux F*.n (..., 4) for unit normals n (..., 2).

    Wave strengths are computed from the Roe-averaged state in the face
    normal frame; acoustic eigenvalues receive a Harten fix of half-width
    ``entropy_fix * (|u_n| + a)``.
    """
    g = gas.gamma
    nx, ny = n[..., 0], n[..., 1]
    rL, uL, vL, pL, _ = primitives(WL, gas, check=check)
    rR, uR, vR, pR, _ = primitives(WR, gas, check=check)
    HL = (WL[..., 3] + pL) / rL
    HR = (WR[..., 3] + pR) / rR
    sL, sR = np.sqrt(rL), np.sqrt(rR)
    den = sL + sR
    rt = sL * sR
    ut = (sL * uL + sR * uR) / den
    vt = (sL * vL + sR * vR) / den
    Ht = (sL * HL + sR * HR) / den
    a2 = (g - 1.0) * (Ht - 0.5 * (ut * ut + vt * vt))
    if check and np.any(_re(a2) <= 0):
        raise NonphysicalStateError("nonphysical Roe state (vacuum Roe average)")
    at = np.sqrt(a2)
    unt = ut * nx + vt * ny
    utt = -ut * ny + vt * nx

    dp = pR - pL
    dr = rR - rL
    dun = (uR - uL) * nx + (vR - vL) * ny
    dut = -(uR - uL) * ny + (vR - vL) * nx
    alpha1 = (dp - rt * at * dun) / (2.0 * a2)
    alpha2 = dr - dp / a2
    alpha3 = rt * dut
    alpha4 = (dp + rt * at * dun) / (2.0 * a2)

    lam1 = cabs(unt - at)
    lam2 = cabs(unt)
    lam4 = cabs(unt + at)
    if entropy_fix:
        delta = entropy_fix * (cabs(unt) + at)
        lam1 = np.where(_re(lam1) < _re(delta), (lam1 * lam1 + delta * delta) / (2 * delta), lam1)
        lam4 = np.where(_re(lam4) < _re(delta), (lam4 * lam4 + delta * delta) / (2 * delta), lam4)

    w1 = lam1 * alpha1
    w2 = lam2 * alpha2
    w3 = lam2 * alpha3
    w4 = lam4 * alpha4
    diss = np.stack([
        w1 + w2 + w4,
        w1 * (ut - at * nx) + w2 * ut + w3 * (-ny) + w4 * (ut + at * nx),
        w1 * (vt - at * ny) + w2 * vt + w3 * nx + w4 * (vt + at * ny),
        w1 * (Ht - unt * at) + w2 * 0.5 * (ut * ut + vt * vt) + w3 * utt + w4 * (Ht + unt * at),
    ], axis=-1)

    def normal_flux(W, r, u, v, p):
        un = u * nx + v * ny
        return np.stack([r * un, W[..., 1] * un + p * nx, W[..., 2] * un + p * ny,
                         (W[..., 3] + p) * un], axis=-1)

    FL = normal_flux(WL, rL, uL, vL, pL)
    FR = normal_flux(WR, rR, uR, vR, pR)
    return 0.5 * (FL + FR) - 0.5 * diss


# --------------------------------------------------------------------------
# Exact solutions


def _radius(x, r_lo, r_hi, tol=1e-9):
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    span = r_hi - r_lo
    if np.any(r < r_lo - tol * span) or np.any(r > r_hi + tol * span):
        raise ValueError(f"radius outside annulus [{r_lo}, {r_hi}]")
    return r


def supersonic_vortex_exact(x, params: VortexParams = VortexParams(), gas: GasModel = GasModel(),
                            strict=True):
    """Isentropic supersonic vortex; returns (rho, u, v, p).

    Counter-clockwise tangential velocity with magnitude M_i a_i r_i / r
    (= M_i / r for the unit inner state).  ``strict=False`` skips the radius
    check, for points of a polynomial geometry that sit slightly outside.
    """
    x = np.asarray(x, dtype=float)
    if strict:
        r = _radius(x, params.r_i, params.r_o)
    else:
        r = np.hypot(x[..., 0], x[..., 1])
    g = gas.gamma
    rho = params.rho_i * (1.0 + 0.5 * (g - 1.0) * params.M_i ** 2
                          * (1.0 - (params.r_i / r) ** 2)) ** (1.0 / (g - 1.0))
    p = rho ** g / g
    a_i = math.sqrt(params.rho_i ** (g - 1.0))
    speed = params.M_i * a_i * params.r_i / r
    u = -speed * x[..., 1] / r
    v = speed * x[..., 0] / r
    return rho, u, v, p


def vortex_state(x, params=VortexParams(), gas=GasModel(), strict=False):
    rho, u, v, p = supersonic_vortex_exact(x, params, gas, strict=strict)
    return conservative_from_primitives(rho, u, v, p, gas)


def couette_vtheta(r, params: CouetteParams):
    return params.C * r * (1.0 / r ** 2 - 1.0 / params.r_o ** 2)


def couette_temperature(r, params: CouetteParams, gas: GasModel):
    # mu / kappa = Pr / Cp; the profile does not depend on mu itself
    ratio = gas.Pr / gas.Cp
    return params.T_i - params.C ** 2 * ratio * (
        2.0 / params.r_o ** 2 * np.log(r / params.r_i) + (1.0 / r ** 2 - 1.0 / params.r_i ** 2))


def taylor_couette_exact(x, params: CouetteParams = CouetteParams(), gas: GasModel = GasModel(mu=1e-3),
                         strict=True):
    """Exact (u, v, T) and (v_theta, omega) for the annular Couette flow."""
    x = np.asarray(x, dtype=float)
    if strict:
        r = _radius(x, params.r_i, params.r_o)
    else:
        r = np.hypot(x[..., 0], x[..., 1])
    theta = np.arctan2(x[..., 1], x[..., 0])
    vt = couette_vtheta(r, params)
    T = couette_temperature(r, params, gas)
    u = -np.sin(theta) * vt
    v = np.cos(theta) * vt
    return (u, v, T), (vt, vt / r)


class RadialPressure:
    """p(r) from rho v_theta^2 / r = dp/dr with rho = p / (R T)."""

    def __init__(self, params: CouetteParams, gas: GasModel, r_min=None, r_max=None, rtol=1e-13):
        self.params = params
        self.gas = gas
        self.p_inner = params.rho_i * gas.R * params.T_i
        lo = params.r_i if r_min is None else min(r_min, params.r_i)
        hi = params.r_o if r_max is None else max(r_max, params.r_o)

        def rhs(r, p):
            vt = couette_vtheta(r, params)
            return p * vt * vt / (gas.R * couette_temperature(r, params, gas) * r)

        kw = dict(method="DOP853", rtol=rtol, atol=1e-15 * self.p_inner, dense_output=True)
        self._up = solve_ivp(rhs, (params.r_i, hi), [self.p_inner], **kw)
        self._down = solve_ivp(rhs, (params.r_i, lo), [self.p_inner], **kw) if lo < params.r_i else None

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        up = r >= self.params.r_i
        out[up] = self._up.sol(r[up])[0]
        if np.any(~up):
            out[~up] = self._down.sol(r[~up])[0]
        return out

    def density(self, r):
        return self(r) / (self.gas.R * couette_temperature(np.asarray(r), self.params, self.gas))


def radial_pressure_ode(params: CouetteParams = CouetteParams(), gas: GasModel = GasModel(mu=1e-3),
                        radii=None, **kw):
    """Table (r, p(r)); the interpolating integrator is returned as well."""
    sol = RadialPressure(params, gas, **kw)
    if radii is None:
        radii = np.linspace(params.r_i, params.r_o, 41)
    radii = np.asarray(radii, dtype=float)
    return radii, sol(radii), sol


def isothermal_pressure_closed_form(r, params: CouetteParams, gas: GasModel):
    """p(r) for uniform T = T_i; quadrature of v_theta^2 / (R T_i r)."""
    p0 = params.rho_i * gas.R * params.T_i

    def integrand(s):
        return couette_vtheta(s, params) ** 2 / (gas.R * params.T_i * s)

    return np.array([p0 * math.exp(quad(integrand, params.r_i, float(ri), epsabs=1e-15,
                                        epsrel=1e-14)[0]) for ri in np.atleast_1d(r)])


def couette_state(x, params: CouetteParams, gas: GasModel, pressure_fn=None):
    """Conservative state of the Couette solution, density from the radial ODE."""
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    if pressure_fn is None:
        pressure_fn = RadialPressure(params, gas, r_min=float(r.min()), r_max=float(r.max()))
    (u, v, T), _ = taylor_couette_exact(x, params, gas, strict=False)
    p = pressure_fn(r.ravel()).reshape(r.shape)
    rho = p / (gas.R * T)
    return conservative_from_primitives(rho, u, v, p, gas)


# --------------------------------------------------------------------------
# Cylindrical-equation oracle

_D1 = np.array([1, -8, 0, 8, -1]) / 12.0            # 4th-order first derivative
_D2 = np.array([-1, 16, -30, 16, -1]) / 12.0        # 4th-order second derivative


def _fd(f, r, h):
    vals = np.array([f(r + j * h) for j in (-2, -1, 0, 1, 2)])
    return vals @ _D1 / h, vals @ _D2 / h ** 2


def cylindrical_equation_residuals(params: CouetteParams = CouetteParams(),
                                   gas: GasModel = GasModel(mu=1e-3), r=0.75, h=1e-3):
    """Residuals of the simplified polar Navier-Stokes equations at radius r.

    Derivatives of the closed-form v_theta and T are taken by fourth-order
    central differences.  Returned keys: dilation, azimuthal_momentum,
    energy, omega_constraint, illingworth_constraint, radial_momentum.
    """
    r = float(r)
    if not (params.r_i < r < params.r_o):
        raise ValueError("radius must lie strictly inside the annulus")
    # keep the stencil inside the domain
    h = min(h, 0.4 * (r - params.r_i), 0.4 * (params.r_o - r))
    r_ref = 0.5 * (params.r_i + params.r_o)
    Pr, Cp = gas.Pr, gas.Cp

    def vt(s):
        return couette_vtheta(s, params)

    def enth(s):
        return Cp * couette_temperature(s, params, gas)

    def omega(s):
        return vt(s) / s

    dv, d2v = _fd(vt, r, h)
    dh, d2h = _fd(enth, r, h)
    mom2 = d2v + dv / r - vt(r) / r ** 2
    shear = dv - vt(r) / r
    energy = (dh + r * d2h) / (r * Pr) + shear ** 2

    def omega_const(s):
        return s ** 3 * _fd(omega, s, h)[0]

    def illingworth(s):
        dom = _fd(omega, s, h)[0]
        return s * (_fd(enth, s, h)[0] + s ** 2 * Pr * omega(s) * dom)

    pres = RadialPressure(params, gas)
    dp = _fd(lambda s: pres(np.array([s]))[0], r, h)[0]
    rho = pres.density(np.array([r]))[0]
    mom1 = rho * vt(r) ** 2 / r - dp
    return {
        "dilation": 0.0,
        "azimuthal_momentum": float(mom2),
        "energy": float(energy),
        "omega_constraint": float(omega_const(r) - omega_const(r_ref)),
        "illingworth_constraint": float(illingworth(r) - illingworth(r_ref)),
        "radial_momentum": float(mom1),
    }
