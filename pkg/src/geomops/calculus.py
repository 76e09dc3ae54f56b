"""Left/right gradients, the b-bracket and the associated Leibniz vector fields.

Local formulas::

    grad_left  F = B^{-T} dF          b(grad_left F, X)  = dF . X
    grad_right F = B^{-1} dF          b(X, grad_right F) = dF . X
    {F, G}_b     = dF^T B^{-T} dG

Gradients are solved pointwise (LU) rather than through an inverse field.
"""

from __future__ import annotations

from . import jet as _jet
from .fields import ScalarField, VectorField, require_order, scalar
from .structure import GeometricStructure

__all__ = [
    "grad_left",
    "grad_right",
    "bracket",
    "bracket_sym",
    "bracket_skew",
    "leibniz_field_sym",
    "hamilton_poisson_field",
    "directional_derivative",
    "as_scalar",
]


def as_scalar(F, dim: int) -> ScalarField:
    return scalar(F, dim)


def _grad(b: GeometricStructure, F, transpose: bool, side: str) -> VectorField:
    F = as_scalar(F, b.dim)
    require_order(F, 1, f"grad_{side}")
    max_order = min(F.max_order, b.matrix.max_order + 1) - 1

    def fn(pts, order):
        dF = F._fn(pts, order + 1).derivative()
        B = b.values(pts, order)
        return _jet.solve(B.T if transpose else B, dF)

    return VectorField(b.dim, fn, max_order, f"grad{side[0].upper()}({F.label})")


def grad_left(b: GeometricStructure, F) -> VectorField:
    """``B^{-T} dF``."""
    return _grad(b, F, True, "left")


def grad_right(b: GeometricStructure, F) -> VectorField:
    """``B^{-1} dF``."""
    return _grad(b, F, False, "right")


def bracket(b: GeometricStructure, F, G) -> ScalarField:
    """``{F, G}_b = dF . grad_left G``."""
    F, G = as_scalar(F, b.dim), as_scalar(G, b.dim)
    require_order(F, 1, "bracket")
    gl = grad_left(b, G)

    def fn(pts, order):
        dF = F._fn(pts, order + 1).derivative()
        return _jet.dot(dF, gl._fn(pts, order))

    return ScalarField(b.dim, fn, min(F.max_order - 1, gl.max_order), f"{{{F.label},{G.label}}}")


def bracket_sym(b: GeometricStructure, F, G) -> ScalarField:
    out = (bracket(b, F, G) + bracket(b, G, F)) * 0.5
    out.label = f"{{{_lab(F)},{_lab(G)}}}_sym"
    return out


def bracket_skew(b: GeometricStructure, F, G) -> ScalarField:
    out = (bracket(b, F, G) - bracket(b, G, F)) * 0.5
    out.label = f"{{{_lab(F)},{_lab(G)}}}_skew"
    return out


def _lab(F):
    return F.label if isinstance(F, ScalarField) else str(F)


def leibniz_field_sym(b: GeometricStructure, F) -> VectorField:
    """``(grad_left F + grad_right F) / 2``; ``dG`` along it is ``{G, F}_sym``."""
    out = (grad_left(b, F) + grad_right(b, F)).scale(0.5)
    out.label = f"Lsym({_lab(F)})"
    return out


def hamilton_poisson_field(b: GeometricStructure, F) -> VectorField:
    """``(grad_left F - grad_right F) / 2``; ``dG`` along it is ``{G, F}_skew``."""
    out = (grad_left(b, F) - grad_right(b, F)).scale(0.5)
    out.label = f"Xskew({_lab(F)})"
    return out


def directional_derivative(G, X: VectorField) -> ScalarField:
    """``dG . X``."""
    G = as_scalar(G, X.dim)
    require_order(G, 1, "directional derivative")

    def fn(pts, order):
        return _jet.dot(G._fn(pts, order + 1).derivative(), X._fn(pts, order))

    return ScalarField(X.dim, fn, min(G.max_order - 1, X.max_order), f"d{G.label}.{X.label}")
