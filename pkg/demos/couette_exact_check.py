"""Check the compressible Couette solution against the cylindrical equations
and sample the profiles a solver should reproduce."""
import numpy as np

from curved_dg.physics import (CouetteParams, GasModel, RadialPressure, couette_temperature,
                               couette_vtheta, cylindrical_equation_residuals)

params, gas = CouetteParams(), GasModel(mu=1e-3)
pressure = RadialPressure(params, gas)
worst = 0.0
print("   r      v_theta     T          p")
for r in np.linspace(params.r_i, params.r_o, 6):
    print(f"{r:5.2f}  {couette_vtheta(r, params):.6f}  {couette_temperature(r, params, gas):.6f}  "
          f"{float(pressure(r)):.6f}")
for r in np.linspace(params.r_i, params.r_o, 22)[1:-1]:
    worst = max(worst, max(abs(v) for v in cylindrical_equation_residuals(params, gas, r=r).values()))
print(f"largest residual of the cylindrical equations at 20 radii: {worst:.2e}")
