"""Boundary conditions and ghost states.

Compressible conditions provide three things at each boundary cubature point:
``ghost`` (exterior state fed to the Roe flux), ``boundary_state`` (the trace
W* used by the gradient equation and the viscous flux) and ``heat_mask``
(0 removes wall conduction).  All of them accept complex states.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .physics import GasModel, _re, conservative_from_primitives, primitives


class BoundaryConfigurationError(ValueError):
    pass


def _prims(W, gas):
    return primitives(W, gas, check=False)


def _normal_velocity(u, v, n):
    return u * n[..., 0] + v * n[..., 1]


# --------------------------------------------------------------------------
# Poisson


@dataclass(frozen=True)
class Dirichlet:
    """u* = g(x)."""
    g: Callable


@dataclass(frozen=True)
class Neumann:
    """q*.n = g_n(x).

    g_n is data on the true boundary (flux through the exact normal), so a
    coarse geometry does not get to see a consistent normal for free.
    """
    g_n: Callable


# --------------------------------------------------------------------------
# Compressible


class CompressibleBC:
    heat_mask = 1.0

    def ghost(self, W, n, x, gas):
        raise NotImplementedError

    def boundary_state(self, W, n, x, gas):
        """W* on the boundary; the primitive average of interior and ghost by default."""
        rho, u, v, p, _ = _prims(W, gas)
        rg, ug, vg, pg, _ = _prims(self.ghost(W, n, x, gas), gas)
        return conservative_from_primitives(0.5 * (rho + rg), 0.5 * (u + ug), 0.5 * (v + vg),
                                            0.5 * (p + pg), gas)


class SlipWall(CompressibleBC):
    """Inviscid wall: the ghost mirrors the normal velocity."""

    def ghost(self, W, n, x, gas):
        rho, u, v, p, _ = _prims(W, gas)
        un = _normal_velocity(u, v, n)
        return conservative_from_primitives(rho, u - 2 * un * n[..., 0], v - 2 * un * n[..., 1], p, gas)

    def boundary_state(self, W, n, x, gas):
        rho, u, v, p, _ = _prims(W, gas)
        un = _normal_velocity(u, v, n)
        return conservative_from_primitives(rho, u - un * n[..., 0], v - un * n[..., 1], p, gas)


@dataclass
class RiemannInvariant(CompressibleBC):
    """Characteristic far-field against a free state.

    ``free_state`` is a conservative 4-vector or a callable x -> W.  For
    supersonic normal flow this is pure upwinding (all free state at inflow,
    all interior state at outflow).
    """

    free_state: object

    def _free(self, x, gas):
        fs = self.free_state
        if callable(fs):
            return fs(x)
        return np.broadcast_to(np.asarray(fs, dtype=float), x.shape[:-1] + (4,))

    def ghost(self, W, n, x, gas):
        g = gas.gamma
        Wf = self._free(x, gas)
        rho, u, v, p, _ = _prims(W, gas)
        rf, uf, vf, pf, _ = _prims(Wf, gas)
        a = np.sqrt(g * p / rho)
        af = np.sqrt(g * pf / rf)
        un = _normal_velocity(u, v, n)
        unf = _normal_velocity(uf, vf, n)
        r_plus = un + 2 * a / (g - 1)
        r_minus = unf - 2 * af / (g - 1)
        # supersonic: both invariants from the upwind side
        sup_out = _re(un) >= _re(a)
        sup_in = _re(unf) <= -_re(af)
        r_minus = np.where(sup_out, un - 2 * a / (g - 1), r_minus)
        r_plus = np.where(sup_in, unf + 2 * af / (g - 1), r_plus)
        unb = 0.5 * (r_plus + r_minus)
        ab = 0.25 * (g - 1) * (r_plus - r_minus)
        outflow = _re(unb) > 0
        s = np.where(outflow, p / rho ** g, pf / rf ** g)
        ut = np.where(outflow, -u * n[..., 1] + v * n[..., 0], -uf * n[..., 1] + vf * n[..., 0])
        rb = (ab * ab / (g * s)) ** (1.0 / (g - 1))
        pb = rb * ab * ab / g
        ub = unb * n[..., 0] - ut * n[..., 1]
        vb = unb * n[..., 1] + ut * n[..., 0]
        Wb = conservative_from_primitives(rb, ub, vb, pb, gas)
        Wb = np.where(sup_out[..., None], W, Wb)
        return np.where(sup_in[..., None], Wf.astype(Wb.dtype), Wb)

    def boundary_state(self, W, n, x, gas):
        return self.ghost(W, n, x, gas)


def _wall_velocity(wall_velocity, x):
    if wall_velocity is None:
        return 0.0, 0.0
    vw = wall_velocity(x)
    return vw[..., 0], vw[..., 1]


@dataclass
class NoSlipAdiabatic(CompressibleBC):
    """No-slip wall with zero heat flux; ``wall_velocity`` is x -> (u, v)."""

    wall_velocity: Callable | None = None
    heat_mask = 0.0

    def ghost(self, W, n, x, gas):
        rho, u, v, p, _ = _prims(W, gas)
        uw, vw = _wall_velocity(self.wall_velocity, x)
        return conservative_from_primitives(rho, 2 * uw - u, 2 * vw - v, p, gas)


@dataclass
class NoSlipIsothermal(CompressibleBC):
    """No-slip wall at temperature ``T_wall``; optional pressure Dirichlet value.

    Ghost: v_g = 2 v_w - v, T_g = 2 T_w - T, p_g = 2 p_w - p (p_g = p when
    ``p_wall`` is None).
    """

    T_wall: float
    p_wall: float | None = None
    wall_velocity: Callable | None = None

    def ghost(self, W, n, x, gas):
        rho, u, v, p, T = _prims(W, gas)
        uw, vw = _wall_velocity(self.wall_velocity, x)
        Tg = 2 * self.T_wall - T
        pg = p if self.p_wall is None else 2 * self.p_wall - p
        return conservative_from_primitives(pg / (gas.R * Tg), 2 * uw - u, 2 * vw - v, pg, gas)

    def boundary_state(self, W, n, x, gas):
        rho, u, v, p, _ = _prims(W, gas)
        uw, vw = _wall_velocity(self.wall_velocity, x)
        pb = p if self.p_wall is None else self.p_wall + 0 * p
        uw = uw + 0 * u
        vw = vw + 0 * v
        return conservative_from_primitives(pb / (gas.R * self.T_wall), uw, vw, pb, gas)


@dataclass
class ExactDirichlet(CompressibleBC):
    """Ghost and boundary trace from an exact-solution callback x -> W."""

    exact: Callable

    def ghost(self, W, n, x, gas):
        return np.asarray(self.exact(x)) + 0 * W

    def boundary_state(self, W, n, x, gas):
        return self.ghost(W, n, x, gas)


def ghost_state(bc, interior, n, x, gas: GasModel | None = None):
    """Exterior state of ``bc`` for the interior trace.

    For Poisson conditions ``interior`` is (u, grad u) and the returned value
    is the pair (u*, q*.n or None); ``None`` means the flux follows the
    interior penalty formula with u* = g.
    """
    if isinstance(bc, Dirichlet):
        return bc.g(x), None
    if isinstance(bc, Neumann):
        u, _ = interior
        return u, bc.g_n(x)
    if isinstance(bc, CompressibleBC):
        if gas is None:
            raise BoundaryConfigurationError("compressible boundary condition needs a gas model")
        return bc.ghost(np.asarray(interior), np.asarray(n), np.asarray(x), gas)
    raise BoundaryConfigurationError(f"unknown boundary condition {bc!r}")
