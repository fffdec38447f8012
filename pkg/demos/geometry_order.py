"""How far the polynomial boundary sits from the true arc, per geometry order.

Prints the max radial deviation on the quarter annulus for k_G = 1..4 over
three refinements and the observed rate.  Even orders pick up an extra
power of h because the face nodes are symmetric about each face midpoint.
"""
import math

from curved_dg.geometry import QuarterAnnulus, boundary_geometry_error, generate_tobecurved_annulus

dom = QuarterAnnulus()
print("k_G   level0      level1      level2      rate")
for kg in range(1, 5):
    errs = [boundary_geometry_error(generate_tobecurved_annulus("tri", kg, lvl, 1.0, dom), 41)
            for lvl in range(3)]
    rate = math.log2(errs[-2] / errs[-1])
    print(f"{kg:3d}  " + "  ".join(f"{e:.3e}" for e in errs) + f"  {rate:5.2f}")
