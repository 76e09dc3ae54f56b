"""Green identities on a box, checked by Gauss-Legendre quadrature.

The report lists the volume integral, the bracket term and the boundary
flux. With interior bumps the boundary terms drop out and the left and
right Laplacians become adjoint.
"""

from geomops import catalog
from geomops.catalog import bump
from geomops.quad import green_combined, green_left, green_right

e = catalog.get("shear2")
b, mu, box = e.structure, e.volume, e.box

for name, fn in (("left", green_left), ("right", green_right)):
    rep = fn(b, mu, "x1", "x1^2 + x2^2", box, 8)
    print(f"{name:5s} lhs {rep.lhs:.12f}  bulk {rep.bulk:.12f}  boundary {rep.boundary:.12f}  residual {rep.residual:.1e}")

F, G = bump([0.45, 0.5], 0.3), bump([0.55, 0.5], 0.3)
rep = green_combined(b, mu, F, G, box, 16, panels=32)
print(f"bumps: int F LapL G = {rep.extra['int_F_lapL_G']:.10f}, int G LapR F = {rep.extra['int_G_lapR_F']:.10f}")
