"""Fast property suite: cubature, Roe flux, Jacobians, free-stream
preservation, the Couette oracle and Newton convergence on all cases."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curved_dg.assembly import FINITE_DIFFERENCE, CompressibleSystem, Discretization
from curved_dg.boundary import RiemannInvariant
from curved_dg.geometry import QuarterAnnulus, generate_tobecurved_annulus
from curved_dg.physics import (CouetteParams, GasModel, conservative_from_primitives,
                               cylindrical_equation_residuals, inviscid_flux, roe_pike_flux)
from curved_dg.reference import build_reference_element, monomial_integral, volume_cubature
from curved_dg.solver import newton_solve
from curved_dg.study import CouetteCase, EulerVortexCase, PoissonCase

GAS = GasModel()


@pytest.mark.parametrize("kind", ["tri", "quad"])
@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_cubature_exact_to_2k(kind, k):
    pts, wts = volume_cubature(kind, 2 * k)
    for a in range(2 * k + 1):
        for b in range(2 * k + 1 - a):
            assert abs(wts @ (pts[:, 0] ** a * pts[:, 1] ** b) - monomial_integral(kind, a, b)) < 1e-13


def states(rng, n):
    return conservative_from_primitives(rng.uniform(0.3, 3, n), rng.uniform(-3, 3, n),
                                        rng.uniform(-3, 3, n), rng.uniform(0.2, 3, n), GAS)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0, 2 * np.pi))
def test_roe_consistent_and_conservative(seed, theta):
    rng = np.random.default_rng(seed)
    WL, WR = states(rng, 4), states(rng, 4)
    n = np.array([np.cos(theta), np.sin(theta)])
    scale = max(1.0, np.abs(inviscid_flux(WL, GAS)).max(), np.abs(inviscid_flux(WR, GAS)).max())
    assert np.abs(roe_pike_flux(WL, WL, n, GAS) - inviscid_flux(WL, GAS) @ n).max() <= 1e-13 * scale
    assert np.abs(roe_pike_flux(WL, WR, n, GAS) + roe_pike_flux(WR, WL, -n, GAS)).max() <= 1e-13 * scale


def small_system(case, kind="tri", k=2):
    mesh = generate_tobecurved_annulus(kind, k, 0, 1.0, case.domain)
    d = Discretization(mesh, build_reference_element(kind, k))
    return d, case.system(d)


def test_euler_jacobian_matches_differences():
    case = EulerVortexCase()
    d, sys_ = small_system(case)
    U = case.initial_state(d) * (1 + 1e-3 * np.random.default_rng(0).normal(size=(d.ne, d.np_, 4)))
    A = sys_.jacobian(U).to_dense()
    F = sys_.jacobian(U, mode=FINITE_DIFFERENCE).to_dense()
    assert np.abs(A - F).max() / np.abs(F).max() <= 1e-6


@pytest.mark.parametrize("kind", ["tri", "quad"])
def test_free_stream_on_cubic_geometry(kind):
    mesh = generate_tobecurved_annulus(kind, 3, 1, 2.5, QuarterAnnulus())
    d = Discretization(mesh, build_reference_element(kind, 3))
    W = conservative_from_primitives(1.0, 0.5, 0.2, 1 / 1.4, GAS)
    bcs = {t: RiemannInvariant(W) for t in ("inner", "outer", "theta_start", "theta_end")}
    R = CompressibleSystem(d, bcs, GAS).residual(np.broadcast_to(W, (d.ne, d.np_, 4)).copy())
    assert np.abs(R).max() <= 1e-11


def test_couette_oracle_twenty_radii():
    P, gas = CouetteParams(), GasModel(mu=1e-3)
    for r in np.linspace(P.r_i, P.r_o, 22)[1:-1]:
        assert max(abs(v) for v in cylindrical_equation_residuals(P, gas, r=r).values()) <= 1e-8


@pytest.mark.parametrize("case_cls", [PoissonCase, EulerVortexCase, CouetteCase])
def test_newton_reaches_machine_precision(case_cls):
    case = case_cls()
    d, sys_ = small_system(case)
    _, rep = newton_solve(sys_, case.initial_state(d), case.default_newton())
    assert rep.converged and rep.residual_history[-1] <= 1e-12
