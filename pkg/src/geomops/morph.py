"""Pullbacks and pushforwards under chart maps, and the naturality checks.

Conventions: ``Phi: M -> N`` is given in coordinates with Jacobian
``J = DPhi`` (entry ``(k, i)`` is ``d Phi^k / d x^i``).  Then

    pullback of b^N      J^T B^N(Phi) J
    pushforward of X     (J X) o Phi^{-1}
    pullback of mu^N     |det J| rho^N(Phi) dx, orientation times sign(det J)

Residuals are entrywise maxima over the probe points, reported with the
point where they occur.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import jet as _jet
from .calculus import as_scalar, bracket, bracket_skew, bracket_sym, grad_left, grad_right
from .errors import DimensionError, PreconditionError
from .fields import DiffeoMap, MatrixField, ScalarField, VectorField, _chain, as_points, compose
from .measure import VolumeForm, divergence, laplace_left, laplace_right
from .structure import GeometricStructure

__all__ = [
    "MorphReport",
    "jacobian_field",
    "pullback_structure",
    "is_geometromorphism",
    "pushforward_vector",
    "pullback_volume",
    "check_grad_naturality",
    "check_bracket_naturality",
    "check_div_naturality",
    "check_laplace_naturality",
    "check_group_property",
]


@dataclass
class MorphReport:
    name: str
    max_residual: float
    probe_count: int
    breakdown: dict = dc_field(default_factory=dict)
    argmax_point: list | None = None
    tol: float | None = None

    @property
    def passed(self) -> bool:
        return self.tol is None or self.max_residual < self.tol

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_residual": self.max_residual,
            "probe_count": self.probe_count,
            "breakdown": self.breakdown,
            "argmax_point": self.argmax_point,
            "tol": self.tol,
            "passed": self.passed,
        }


class _Collector:
    """Merge per-identity residual arrays into one report."""

    def __init__(self, pts):
        self.pts = pts
        self.parts = {}
        self.worst = (-1.0, None)

    def add(self, key, diff):
        diff = np.abs(np.asarray(diff, dtype=float))
        per_point = diff.reshape(len(self.pts), -1).max(axis=1)
        i = int(np.argmax(per_point))
        self.parts[key] = float(per_point[i])
        if per_point[i] > self.worst[0]:
            self.worst = (float(per_point[i]), self.pts[i].tolist())

    def report(self, name, tol):
        return MorphReport(name, max(self.worst[0], 0.0), len(self.pts), self.parts, self.worst[1], tol)


def _points(b, points):
    return b.probes() if points is None else as_points(points, b.dim)[0]


def _check_dims(phi, *objs):
    for o in objs:
        if o.dim != phi.dim:
            raise DimensionError(f"map on R^{phi.dim} cannot act on an object over R^{o.dim}")


def jacobian_field(phi: VectorField) -> MatrixField:
    def fn(pts, order):
        return phi._fn(pts, order + 1).derivative()

    return MatrixField(phi.dim, fn, phi.max_order - 1, f"D{phi.label}")


def pullback_structure(phi: DiffeoMap, bN: GeometricStructure, box=None) -> GeometricStructure:
    """``J^T B^N(Phi) J``."""
    _check_dims(phi, bN)
    J = jacobian_field(phi)
    BN = compose(bN.matrix, phi)
    out = J.T @ BN @ J
    out.label = f"{phi.label}*{bN.name}"
    return GeometricStructure(out, box or bN.box, out.label)


def is_geometromorphism(phi: DiffeoMap, bM: GeometricStructure, bN: GeometricStructure,
                        points=None, tol: float = 1e-9) -> MorphReport:
    pts = _points(bM, points)
    pb = pullback_structure(phi, bN)
    c = _Collector(pts)
    c.add("pullback", pb.matrix(pts) - bM.matrix(pts))
    return c.report(f"geometromorphism[{phi.label}]", tol)


def _require_inverse(phi: DiffeoMap):
    if getattr(phi, "inverse", None) is None:
        raise PreconditionError(f"map {phi.label} has no declared inverse")
    return phi.inverse


def pushforward_vector(phi: DiffeoMap, X: VectorField) -> VectorField:
    """``(J X) o Phi^{-1}``; needs the declared inverse."""
    _check_dims(phi, X)
    inv = _require_inverse(phi)

    def jx(pts, order):
        return _jet.matvec(phi._fn(pts, order + 1).derivative(), X._fn(pts, order))

    JX = VectorField(phi.dim, jx, min(phi.max_order - 1, X.max_order), f"D{phi.label}.{X.label}")
    out = compose(JX, inv)
    out.label = f"{phi.label}_*{X.label}"
    return out


def pullback_volume(phi: DiffeoMap, muN: VolumeForm, points=None, box=None) -> VolumeForm:
    """``|det J| rho^N(Phi)`` with the orientation adjusted by ``sign(det J)``."""
    _check_dims(phi, muN)
    box = box or muN.box
    pts = box.probes() if points is None else as_points(points, phi.dim)[0]
    d = np.linalg.det(phi.jet(pts, 1).grad)
    if np.all(d > 0):
        s = 1
    elif np.all(d < 0):
        s = -1
    else:
        raise PreconditionError(f"Jacobian determinant of {phi.label} vanishes or changes sign on the probes")
    J = jacobian_field(phi)
    rhoN = muN.density

    def fn(p, order):
        inner = phi._fn(p, order)
        r = _chain(rhoN._fn(inner.val, order), inner)
        return _jet.det(J._fn(p, order)) * r * float(s)

    rho = ScalarField(phi.dim, fn, min(J.max_order, rhoN.max_order), f"{phi.label}*{rhoN.label}")
    return VolumeForm(rho, muN.orientation * s, muN.kind, box)


def _volumes_match(phi, muM: VolumeForm, muN: VolumeForm, pts, tol):
    pb = pullback_volume(phi, muN, pts)
    gap = float(np.max(np.abs(pb.density(pts) - muM.density(pts))))
    if gap > tol or pb.orientation != muM.orientation:
        raise PreconditionError(f"{phi.label} does not carry the target volume to the source volume (gap {gap:.3g})")


def _require_geometromorphism(phi, bM, bN, pts, tol):
    rep = is_geometromorphism(phi, bM, bN, pts, tol)
    if not rep.passed:
        raise PreconditionError(
            f"{phi.label} is not a geometromorphism (residual {rep.max_residual:.3g} at {rep.argmax_point})"
        )


def check_grad_naturality(phi: DiffeoMap, bM: GeometricStructure, bN: GeometricStructure, F, points=None,
                          tol: float = 1e-8, pre_tol: float = 1e-9) -> MorphReport:
    """``Phi_*(grad^M (F o Phi)) = grad^N F`` for both chiralities, compared at ``Phi(p)``."""
    pts = _points(bM, points)
    _require_geometromorphism(phi, bM, bN, pts, pre_tol)
    F = as_scalar(F, bN.dim)
    FM = compose(F, phi)
    q = phi(pts)
    c = _Collector(pts)
    for side, grad in (("left", grad_left), ("right", grad_right)):
        lhs = pushforward_vector(phi, grad(bM, FM))(q)
        c.add(side, lhs - grad(bN, F)(q))
    return c.report(f"grad_naturality[{phi.label}]", tol)


def check_bracket_naturality(phi: DiffeoMap, bM: GeometricStructure, bN: GeometricStructure, F, G,
                             points=None, tol: float = 1e-8, pre_tol: float = 1e-9) -> MorphReport:
    """``{F, G}^N o Phi = {F o Phi, G o Phi}^M`` for the bracket and its sym/skew parts."""
    pts = _points(bM, points)
    _require_geometromorphism(phi, bM, bN, pts, pre_tol)
    F, G = as_scalar(F, bN.dim), as_scalar(G, bN.dim)
    FM, GM = compose(F, phi), compose(G, phi)
    q = phi(pts)
    c = _Collector(pts)
    for key, br in (("bracket", bracket), ("sym", bracket_sym), ("skew", bracket_skew)):
        c.add(key, br(bN, F, G)(q) - br(bM, FM, GM)(pts))
    return c.report(f"bracket_naturality[{phi.label}]", tol)


def check_div_naturality(phi: DiffeoMap, muM: VolumeForm, muN: VolumeForm, X: VectorField, points=None,
                         tol: float = 1e-8, pre_tol: float = 1e-9) -> MorphReport:
    """``div^N(Phi_* X) o Phi = div^M X`` when ``Phi`` carries ``mu^N`` back to ``mu^M``."""
    pts = muM.box.probes() if points is None else as_points(points, muM.dim)[0]
    _volumes_match(phi, muM, muN, pts, pre_tol)
    c = _Collector(pts)
    c.add("div", divergence(muN, pushforward_vector(phi, X))(phi(pts)) - divergence(muM, X)(pts))
    return c.report(f"div_naturality[{phi.label}]", tol)


def check_laplace_naturality(phi: DiffeoMap, bM: GeometricStructure, muM: VolumeForm, bN: GeometricStructure,
                             muN: VolumeForm, F, points=None, tol: float = 1e-8,
                             pre_tol: float = 1e-9) -> MorphReport:
    """``Lap^M (F o Phi) = (Lap^N F) o Phi`` for both chiralities."""
    pts = _points(bM, points)
    _require_geometromorphism(phi, bM, bN, pts, pre_tol)
    _volumes_match(phi, muM, muN, pts, pre_tol)
    F = as_scalar(F, bN.dim)
    FM = compose(F, phi)
    q = phi(pts)
    c = _Collector(pts)
    for side, lap in (("left", laplace_left), ("right", laplace_right)):
        c.add(side, lap(bM, muM, FM)(pts) - lap(bN, muN, F)(q))
    return c.report(f"laplace_naturality[{phi.label}]", tol)


def check_group_property(maps, b: GeometricStructure, points=None, tol: float = 1e-9) -> MorphReport:
    """Pairwise compositions and declared inverses of geometromorphisms are geometromorphisms."""
    pts = _points(b, points)
    maps = list(maps)
    for m in maps:
        _require_inverse(m)
        _require_geometromorphism(m, b, b, pts, tol)
    c = _Collector(pts)
    for m in maps:
        c.add(f"inverse[{m.label}]", pullback_structure(m.inverse, b).matrix(pts) - b.matrix(pts))
    for m1 in maps:
        for m2 in maps:
            comp = m1.after(m2)
            c.add(f"{m1.label}o{m2.label}", pullback_structure(comp, b).matrix(pts) - b.matrix(pts))
    return c.report("group_property", tol)
