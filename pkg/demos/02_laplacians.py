"""Laplace-like operators for three kinds of structure.

Riemannian (hyperbolic half-plane): Laplace-Beltrami of log y is -1.
Lorentzian (Minkowski): the left and right operators are the d'Alembertian.
Symplectic with Liouville volume: both operators vanish identically.
"""

import numpy as np

from geomops import catalog, laplace_left, laplace_right

pts = np.array([[0.2, 0.6], [0.5, 1.0], [0.9, 1.8]])

hyp = catalog.get("hyperbolic-half-plane")
print("hyperbolic  Lap log(y):", laplace_left(hyp.structure, hyp.volume, "log(x2)")(pts))

mink = catalog.get("minkowski")
F = "x1^2 + 3*x2^2"
print("minkowski   LapL, LapR:", laplace_left(mink.structure, mink.volume, F)(pts),
      laplace_right(mink.structure, mink.volume, F)(pts))

sym = catalog.get("exp-symplectic")
H = "x1^3*x2 + sin(x2)"
print("symplectic  LapL, LapR:", laplace_left(sym.structure, sym.volume, H)(pts),
      laplace_right(sym.structure, sym.volume, H)(pts))
