"""Operators commute with structure-preserving maps.

An SL(2) shear preserves the canonical symplectic form, and scaling
preserves the hyperbolic metric. Gradients, brackets, divergences and
Laplacians all transform naturally. A plain stretch is rejected.
"""

from geomops import catalog
from geomops.fields import DiffeoMap
from geomops.morph import check_bracket_naturality, check_laplace_naturality, is_geometromorphism

sym = catalog.get("canonical-symplectic")
phi = sym.morphisms["shear"]
rep = check_bracket_naturality(phi, sym.structure, sym.structure, "x1^2*x2", "sin(x1) + x2")
print(f"{rep.name}: {rep.max_residual:.1e}")

hyp = catalog.get("hyperbolic-half-plane")
rep = check_laplace_naturality(hyp.morphisms["scale"], hyp.structure, hyp.volume, hyp.structure, hyp.volume, "x1*x2^2")
print(f"{rep.name}: {rep.max_residual:.1e}")

stretch = DiffeoMap.from_exprs(["2*x1", "x2"], ["x1/2", "x2"], "stretch")
print("stretch preserves the Euclidean metric:", is_geometromorphism(stretch, catalog.get("euclidean").structure,
                                                                    catalog.get("euclidean").structure).passed)
