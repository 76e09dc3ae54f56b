"""Gradient-like flows: endpoint, flowed volume and the transport identity.

The left-gradient flow of x^2 + y^2 for the shear structure is integrated
with RK4. The unit square is carried along. Its volume grows at the rate
given by the integral of the left Laplacian over the moving domain.
"""

from geomops import catalog
from geomops.box import Box
from geomops.flowdyn import check_flow_bracket, gradient_field, integrate, transport_check

e = catalog.get("shear2")
F = "x1^2 + x2^2"

traj = integrate(gradient_field(e.structure, F, "left"), [1.0, 0.0], 0.1, 1000)
print("endpoint from (1, 0):", traj.end)

rep = transport_check(e.structure, e.volume, F, Box.cube(2), 0.1, 1000)
v = rep.values
print(f"m(Phi_0.1 U) = {v['volume']:.7f}   d/dt = {v['lhs']:.6f}   int Lap F = {v['rhs']:.6f}")

fb = check_flow_bracket(e.structure, F, "x1", [0.3, 0.4], 0.5, 1000, "L")
print(f"d/dt x1 along the flow vs bracket: max gap {fb.residual:.1e}")
