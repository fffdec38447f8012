import math

import numpy as np
import pytest

from curved_dg.assembly import (FINITE_DIFFERENCE, CompressibleSystem, Discretization,
                                PoissonSystem)
from curved_dg.boundary import (BoundaryConfigurationError, Dirichlet, ExactDirichlet, Neumann,
                                RiemannInvariant, SlipWall)
from curved_dg.geometry import (FullAnnulus, QuarterAnnulus,
                                generate_tobecurved_annulus, square_mesh)
from curved_dg.physics import (GasModel, conservative_from_primitives,
                               vortex_state)
from curved_dg.reference import build_reference_element
from curved_dg.solver import newton_solve, NewtonConfig
from curved_dg.study import CouetteCase, EulerVortexCase

TAGS = ("inner", "outer", "theta_start", "theta_end")
GAS = GasModel()
NS_GAS = GasModel(mu=1e-2)


def disc_for(kind, kg, k, level=0, ar=1.0, domain=None, **kw):
    mesh = generate_tobecurved_annulus(kind, kg, level, ar, domain or QuarterAnnulus(), **kw)
    return Discretization(mesh, build_reference_element(kind, k))


def constant_state(disc, W):
    return np.broadcast_to(W, (disc.ne, disc.np_, 4)).copy()


def jac_rel_diff(system, U):
    A = system.jacobian(U).to_dense()
    F = system.jacobian(U, mode=FINITE_DIFFERENCE).to_dense()
    return np.abs(A - F).max() / np.abs(F).max()


# ---------------------------------------------------------------- Poisson

def test_poisson_constant_with_zero_neumann_has_zero_residual():
    d = disc_for("tri", 2, 2)
    sys_ = PoissonSystem(d, {t: Neumann(lambda x: 0 * x[..., 0]) for t in TAGS}, lambda x: 0 * x[..., 0])
    assert np.abs(sys_.residual(np.full((d.ne, d.np_), 3.7))).max() < 1e-13


def test_poisson_missing_tag():
    d = disc_for("tri", 1, 1)
    with pytest.raises(BoundaryConfigurationError):
        PoissonSystem(d, {"inner": Dirichlet(lambda x: 0 * x[..., 0])}, lambda x: 0 * x[..., 0])


@pytest.mark.parametrize("kind", ["tri", "quad"])
def test_poisson_operator_symmetric_on_straight_mesh(kind):
    mesh = square_mesh(kind, 3)
    d = Discretization(mesh, build_reference_element(kind, 2))
    zero = lambda x: 0 * x[..., 0]
    sys_ = PoissonSystem(d, {t: Dirichlet(zero) for t in set(mesh.boundary_tags)}, zero)
    A = sys_.jacobian().to_dense()
    assert np.abs(A - A.T).max() <= 1e-12 * np.abs(A).max()
    assert np.linalg.eigvalsh(-0.5 * (A + A.T)).min() > 0


def test_poisson_jacobian_is_linear_and_matches_differences():
    d = disc_for("tri", 2, 2)
    bcs = {"inner": Dirichlet(lambda x: x[..., 0]), "outer": Neumann(lambda x: x[..., 1]),
           "theta_start": Dirichlet(lambda x: 1 + 0 * x[..., 0]), "theta_end": Neumann(lambda x: 0 * x[..., 0])}
    sys_ = PoissonSystem(d, bcs, lambda x: np.sin(x[..., 0]))
    rng = np.random.default_rng(0)
    u, w = rng.normal(size=(2, d.ne, d.np_))
    J = sys_.jacobian()
    diff = sys_.residual(u + w) - sys_.residual(u)
    assert np.abs(J @ w.ravel() - diff.ravel()).max() < 1e-12 * max(1, np.abs(diff).max())
    assert np.abs(J @ u.ravel() - sys_.rhs() - sys_.residual(u).ravel()).max() < 1e-11
    assert jac_rel_diff(sys_, u) < 1e-6


def test_poisson_gradient_recovers_linear_field():
    d = disc_for("tri", 1, 2)
    lin = lambda x: 2 * x[..., 0] - x[..., 1]
    bcs = {t: Dirichlet(lin) for t in TAGS}
    sys_ = PoissonSystem(d, bcs, lambda x: 0 * x[..., 0])
    u = lin(d.maps.x_nodes)
    q = sys_.gradient(u)
    assert np.abs(q - np.array([2.0, -1.0])).max() < 1e-11
    assert np.abs(sys_.residual(u)).max() < 1e-11


# ---------------------------------------------------------------- Euler

def test_free_stream_preserved_on_curved_mesh():
    d = disc_for("tri", 3, 3, level=1, ar=2.5)
    W = conservative_from_primitives(1.0, 0.4, -0.3, 1.0 / 1.4, GAS)
    sys_ = CompressibleSystem(d, {t: RiemannInvariant(W) for t in TAGS}, GAS)
    assert np.abs(sys_.residual(constant_state(d, W))).max() <= 1e-11


def test_free_stream_preserved_navier_stokes():
    d = disc_for("quad", 3, 3, level=1)
    W = conservative_from_primitives(1.0, 0.4, -0.3, 1.0, NS_GAS)
    sys_ = CompressibleSystem(d, {t: ExactDirichlet(lambda x, W=W: W) for t in TAGS}, NS_GAS)
    assert np.abs(sys_.residual(constant_state(d, W))).max() <= 1e-11


def perturbed_vortex(d, seed=0, amp=1e-3):
    U = vortex_state(d.maps.x_nodes)
    return U * (1 + amp * np.random.default_rng(seed).normal(size=U.shape))


def test_euler_analytic_jacobian_matches_differences():
    case = EulerVortexCase()
    d = disc_for("tri", 2, 2, domain=case.domain)
    sys_ = case.system(d)
    assert jac_rel_diff(sys_, perturbed_vortex(d)) <= 1e-6


def test_navier_stokes_analytic_jacobian_matches_differences():
    d = disc_for("quad", 2, 2, domain=FullAnnulus())
    W0 = conservative_from_primitives(1.0, 0.3, 0.2, 1.0, NS_GAS)
    rng = np.random.default_rng(1)
    sys_ = CompressibleSystem(d, {"inner": ExactDirichlet(lambda x: W0 + 0 * x[..., :1]),
                                  "outer": SlipWall()}, NS_GAS)
    U = constant_state(d, W0) * (1 + 1e-2 * rng.normal(size=(d.ne, d.np_, 4)))
    assert jac_rel_diff(sys_, U) <= 1e-6


def test_couette_analytic_jacobian_matches_backward_differences():
    # at the adiabatic wall the Roe-averaged normal velocity is exactly zero,
    # where |u_n| has a kink; the linearization takes the backward slope there
    case = CouetteCase(mu=1e-2)
    d = disc_for("tri", 2, 2, domain=case.domain)
    sys_ = case.system(d)
    U = case.initial_state(d) * (1 + 1e-3 * np.random.default_rng(2).normal(size=(d.ne, d.np_, 4)))
    A = sys_.jacobian(U).to_dense()
    u, h = U.ravel(), 1e-7
    R0 = sys_.residual(U).ravel()
    cols = np.random.default_rng(5).choice(u.size, 40, replace=False)
    worst = 0.0
    for j in cols:
        e = np.zeros_like(u)
        e[j] = h
        back = (R0 - sys_.residual((u - e).reshape(U.shape)).ravel()) / h
        worst = max(worst, np.abs(back - A[:, j]).max())
    assert worst <= 1e-6 * np.abs(A).max()


def test_residual_is_deterministic():
    case = EulerVortexCase()
    d = disc_for("tri", 2, 2, domain=case.domain)
    U = perturbed_vortex(d)
    assert np.array_equal(case.system(d).residual(U), case.system(d).residual(U))


def test_mass_residual_sums_to_boundary_flux():
    # with constant test functions only the face terms survive and the
    # interior ones cancel pairwise
    case = EulerVortexCase()
    d = disc_for("tri", 2, 2, domain=case.domain)
    sys_ = case.system(d)
    U = perturbed_vortex(d)
    R = sys_.residual(U)
    f = sys_._fields(U)
    Fn = sys_._face_flux(f)
    bnd = ~d.is_interior
    flux = np.einsum("efs,efs->ef", d.wJf, Fn[..., 0])[bnd].sum()
    assert abs(R[..., 0].sum() - flux) <= 1e-12 * max(1.0, np.abs(R).max())


def test_q_consistency_for_continuous_state():
    d = disc_for("quad", 1, 2)
    W = lambda x: np.stack([1 + 0.1 * x[..., 0], 0.2 * x[..., 1], 0 * x[..., 0] + 0.1,
                            2.5 + 0.05 * x[..., 0] * 0], axis=-1)
    sys_ = CompressibleSystem(d, {t: ExactDirichlet(W) for t in TAGS}, NS_GAS)
    f = sys_._fields(W(d.maps.x_nodes))
    grad = np.zeros((4, 2))
    grad[0, 0] = 0.1
    grad[1, 1] = 0.2
    assert np.abs(f["Qv"] - grad).max() < 1e-11


def rotate(W, R):
    out = W.copy()
    out[..., 1:3] = W[..., 1:3] @ R.T
    return out


def test_residual_rotation_equivariance():
    theta = 0.37
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    mesh = generate_tobecurved_annulus("tri", 2, 0, 1.0, QuarterAnnulus())
    ref = build_reference_element("tri", 2)
    d = Discretization(mesh, ref)
    mesh_r = generate_tobecurved_annulus("tri", 2, 0, 1.0, QuarterAnnulus())
    mesh_r.nodes = mesh_r.nodes @ R.T
    d_r = Discretization(mesh_r, ref)
    ex = lambda x: vortex_state(x)
    ex_r = lambda x: rotate(vortex_state(x @ R), R)
    bcs = {t: RiemannInvariant(ex) for t in TAGS}
    bcs_r = {t: RiemannInvariant(ex_r) for t in TAGS}
    U = perturbed_vortex(d)
    a = CompressibleSystem(d, bcs, GAS).residual(U)
    b = CompressibleSystem(d_r, bcs_r, GAS).residual(rotate(U, R))
    assert np.abs(rotate(a, R) - b).max() < 1e-11


def test_vortex_truncation_error_decays():
    case = EulerVortexCase()
    norms, hs = [], []
    for level in (0, 1):
        d = disc_for("tri", 4, 3, level=level, domain=case.domain)
        R = case.system(d).residual(case.initial_state(d))
        # divide by element size so the residual approximates a pointwise quantity
        norms.append(np.sqrt(np.sum(R ** 2) / d.wJ.sum()) / np.sqrt(d.ne))
    assert math.log2(norms[0] / norms[1]) > 3.0


def test_couette_solves_from_perturbed_start():
    case = CouetteCase(mu=1e-2)
    d = disc_for("quad", 2, 1, domain=case.domain)
    sys_ = case.system(d)
    U0 = case.initial_state(d) * (1 + 1e-3 * np.random.default_rng(3).normal(size=(d.ne, d.np_, 4)))
    U, rep = newton_solve(sys_, U0, NewtonConfig(preconditioner="lu", max_newton=15))
    assert rep.converged and rep.newton_iterations <= 15
