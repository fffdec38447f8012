"""One Navier-Stokes solve driven through the library API rather than the CLI."""
from curved_dg import Discretization, build_reference_element, generate_tobecurved_annulus, newton_solve
from curved_dg.study import CouetteCase

case = CouetteCase(mu=1e-3)
mesh = generate_tobecurved_annulus("quad", 2, 1, 1.0, case.domain)
ref = build_reference_element("quad", 2)
disc = Discretization(mesh, ref)
system = case.system(disc)
U, report = newton_solve(system, case.initial_state(disc), case.default_newton())
print(f"{mesh.num_elements} quads, Newton iterations {report.newton_iterations}, "
      f"final |R| {report.residual_history[-1]:.2e}")
for name, err in case.errors(system, U, mesh, ref).errors.items():
    print(f"L2 {name}: {err:.3e}")
