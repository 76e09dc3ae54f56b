"""Gauss-Legendre quadrature on boxes and their boundaries, and the integral identities.

Integrals against a volume form ``mu = rho dx`` are taken against the
measure, i.e. ``int f dm_mu = int_box f rho dx``.  For boundary terms the
contraction ``i_X mu`` restricted to the face ``x^k = const`` is
``+-rho X^k dx^1..^dx^k..^dx^n`` with the sign of the outward normal, so

    int_{boundary} F i_X mu = sum_faces (+-) int_face F rho X^k dS.

Both sides of every identity use the positive density, so the result does
not depend on the orientation sign stored on the volume form.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from .box import Box
from .calculus import as_scalar, bracket, grad_left, grad_right
from .errors import PreconditionError
from .fields import ScalarField, VectorField
from .measure import VolumeForm, laplace_left, laplace_right, liouville_volume, rescale_volume, riemannian_volume
from .parallel import map_points
from .structure import GeometricStructure

__all__ = [
    "Box",
    "QuadRule",
    "IdentityReport",
    "gauss_legendre",
    "integrate_box",
    "integrate_boundary_flux",
    "boundary_faces",
    "green_left",
    "green_right",
    "green_combined",
    "green_riemannian",
    "symplectic_green",
    "dirichlet_energy",
    "el_residual",
]


@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(order: int, a: float = -1.0, b: float = 1.0, panels: int = 1):
    """Nodes and weights of the ``order``-point rule on ``[a, b]``.

    With ``panels > 1`` the interval is split into equal panels, each carrying
    its own ``order``-point rule (composite Gauss-Legendre).
    """
    if order < 1:
        raise ValueError("quadrature order must be at least 1")
    if panels < 1:
        raise ValueError("panel count must be at least 1")
    x, w = _leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    h = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * (x + 1.0)).ravel()
    weights = (h[:, None] * w).ravel()
    return nodes, weights


@dataclass(frozen=True)
class QuadRule:
    """Tensor-product rule: ``nodes`` is ``(N, n)``, ``weights`` is ``(N,)``."""

    orders: tuple
    panels: int
    nodes: np.ndarray = dc_field(repr=False)
    weights: np.ndarray = dc_field(repr=False)

    @classmethod
    def on_box(cls, box: Box, order, panels: int = 1) -> "QuadRule":
        orders = (order,) * box.dim if np.isscalar(order) else tuple(order)
        if len(orders) != box.dim:
            raise ValueError("one order per axis expected")
        xs, ws = zip(*(gauss_legendre(o, a, b, panels) for o, a, b in zip(orders, box.lower, box.upper)))
        grid = np.meshgrid(*xs, indexing="ij")
        wgrid = np.meshgrid(*ws, indexing="ij")
        nodes = np.stack([g.ravel() for g in grid], axis=1)
        weights = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
        return cls(orders, panels, nodes, weights)

    def integrate_values(self, values: np.ndarray) -> float:
        return float(np.sum(self.weights * values))


def _values(f, pts: np.ndarray) -> np.ndarray:
    if not callable(f) or isinstance(f, str):
        f = as_scalar(f, pts.shape[1])
    if isinstance(f, ScalarField):
        return map_points(f, pts)
    return np.asarray(f(pts), dtype=float)


def integrate_box(f, box: Box, order: int, panels: int = 1) -> float:
    """Tensor Gauss-Legendre integral of ``f`` over ``box`` (Lebesgue)."""
    rule = QuadRule.on_box(box, order, panels)
    return rule.integrate_values(_values(f, rule.nodes))


def boundary_faces(box: Box, order: int, panels: int = 1):
    """Yield ``(axis, outward_sign, nodes, weights)`` for the ``2n`` faces."""
    n = box.dim
    for k in range(n):
        others = [i for i in range(n) if i != k]
        if others:
            sub = QuadRule.on_box(Box(tuple(box.lower[i] for i in others), tuple(box.upper[i] for i in others)), order, panels)
            base, w = sub.nodes, sub.weights
        else:
            base, w = np.zeros((1, 0)), np.ones(1)
        for sign, val in ((-1.0, box.lower[k]), (1.0, box.upper[k])):
            pts = np.empty((len(w), n))
            pts[:, others] = base
            pts[:, k] = val
            yield k, sign, pts, w


def integrate_boundary_flux(mu: VolumeForm, X: VectorField, scale, box: Box, order: int, per_face: bool = False, panels: int = 1):
    """``int_{boundary} scale i_X mu`` as a sum of face integrals of ``scale rho (X . nu)``."""
    scale = None if scale is None else as_scalar(scale, box.dim)
    total = 0.0
    faces = []
    for k, sign, pts, w in boundary_faces(box, order, panels):
        v = sign * map_points(X, pts)[:, k] * map_points(mu.density, pts)
        if scale is not None:
            v = v * map_points(scale, pts)
        val = float(np.sum(w * v))
        faces.append({"axis": k + 1, "side": "upper" if sign > 0 else "lower", "value": val})
        total += val
    return (total, faces) if per_face else total


def _integral(f, mu: VolumeForm, box: Box, order: int, panels: int = 1) -> float:
    """``int_box f dm_mu``."""
    rule = QuadRule.on_box(box, order, panels)
    return rule.integrate_values(_values(f, rule.nodes) * _values(mu.density, rule.nodes))


@dataclass
class IdentityReport:
    """One integral identity: ``lhs`` against ``rhs`` assembled from ``parts``."""

    identity: str
    lhs: float
    rhs: float
    parts: dict
    residual: float
    order: int
    box: list
    panels: int = 1
    extra: dict = dc_field(default_factory=dict)

    def __getattr__(self, name):
        # parts double as attributes, e.g. report.bulk, report.boundary
        parts = self.__dict__.get("parts", {})
        if name in parts:
            return parts[name]
        raise AttributeError(name)

    def passed(self, tol: float) -> bool:
        return bool(self.residual < tol)

    def to_dict(self) -> dict:
        return asdict(self)


def _report(identity, lhs, rhs, parts, box, order, panels=1, **extra):
    return IdentityReport(
        identity, float(lhs), float(rhs), parts, float(abs(lhs - rhs)), int(order), box.to_flat(), int(panels), extra
    )


def green_left(b: GeometricStructure, mu: VolumeForm, F, G, box: Box, order: int = 8, panels: int = 1) -> IdentityReport:
    """``int F LapL G = -int {F,G} + int_boundary F i_{gradL G} mu``."""
    F, G = as_scalar(F, b.dim), as_scalar(G, b.dim)
    lhs = _integral(F * laplace_left(b, mu, G), mu, box, order, panels)
    bulk = _integral(bracket(b, F, G), mu, box, order, panels)
    boundary = integrate_boundary_flux(mu, grad_left(b, G), F, box, order, panels=panels)
    return _report("green_left", lhs, -bulk + boundary, {"bulk": bulk, "boundary": boundary}, box, order, panels)


def green_right(b: GeometricStructure, mu: VolumeForm, F, G, box: Box, order: int = 8, panels: int = 1) -> IdentityReport:
    """``int F LapR G = -int {G,F} + int_boundary F i_{gradR G} mu``."""
    F, G = as_scalar(F, b.dim), as_scalar(G, b.dim)
    lhs = _integral(F * laplace_right(b, mu, G), mu, box, order, panels)
    bulk = _integral(bracket(b, G, F), mu, box, order, panels)
    boundary = integrate_boundary_flux(mu, grad_right(b, G), F, box, order, panels=panels)
    return _report("green_right", lhs, -bulk + boundary, {"bulk": bulk, "boundary": boundary}, box, order, panels)


def green_combined(b: GeometricStructure, mu: VolumeForm, F, G, box: Box, order: int = 8, panels: int = 1) -> IdentityReport:
    """``int (F LapL G - G LapR F) = int_boundary i_{F gradL G - G gradR F} mu``.

    ``extra`` also carries the two bulk integrals separately, which are equal
    (adjointness) when the boundary term vanishes.
    """
    F, G = as_scalar(F, b.dim), as_scalar(G, b.dim)
    left = _integral(F * laplace_left(b, mu, G), mu, box, order, panels)
    right = _integral(G * laplace_right(b, mu, F), mu, box, order, panels)
    bL = integrate_boundary_flux(mu, grad_left(b, G), F, box, order, panels=panels)
    bR = integrate_boundary_flux(mu, grad_right(b, F), G, box, order, panels=panels)
    boundary = bL - bR
    return _report(
        "green_combined", left - right, boundary, {"boundary": boundary}, box, order, panels,
        int_F_lapL_G=left, int_G_lapR_F=right,
    )


def _riemann_boundary(g: GeometricStructure, X: VectorField, scale: ScalarField, box: Box, order: int, panels: int = 1) -> float:
    """``int_boundary scale g(X, nu) dm_boundary`` with the metric unit normal.

    On the face ``x^k = c`` the outward unit normal is ``+-G^{-1} e_k / sqrt(g^kk)``
    and the induced boundary density is ``sqrt(det G g^kk)``.
    """
    total = 0.0
    n = box.dim
    for k, sign, pts, w in boundary_faces(box, order, panels):
        Gv = g.matrix(pts)
        Ginv = np.linalg.inv(Gv)
        gkk = Ginv[:, k, k]
        nu = sign * Ginv[:, :, k] / np.sqrt(gkk)[:, None]
        Xv = map_points(X, pts)
        gXnu = np.einsum("mi,mij,mj->m", Xv, Gv, nu)
        dens = np.sqrt(np.linalg.det(Gv) * gkk)
        total += float(np.sum(w * scale(pts) * gXnu * dens))
    return total


def green_riemannian(b: GeometricStructure, g: GeometricStructure, F, G, box: Box, order: int = 8,
                     chirality: str = "L", panels: int = 1) -> IdentityReport:
    """Green identity on a Riemannian chart with the boundary term in unit-normal form.

    Both boundary forms are reported: ``boundary_flux`` (coordinate flux with
    ``rho = sqrt|g|``) and ``boundary_normal`` (``g(X, nu)`` times the induced
    boundary density); the residual uses the latter.
    """
    F, G = as_scalar(F, b.dim), as_scalar(G, b.dim)
    mu = riemannian_volume(g)
    if chirality == "L":
        lap, X, brk = laplace_left(b, mu, G), grad_left(b, G), bracket(b, F, G)
    elif chirality == "R":
        lap, X, brk = laplace_right(b, mu, G), grad_right(b, G), bracket(b, G, F)
    else:
        raise ValueError("chirality must be 'L' or 'R'")
    lhs = _integral(F * lap, mu, box, order, panels)
    bulk = _integral(brk, mu, box, order, panels)
    flux = integrate_boundary_flux(mu, X, F, box, order, panels=panels)
    normal = _riemann_boundary(g, X, F, box, order, panels)
    return _report(
        f"green_riemannian_{chirality}", lhs, -bulk + normal,
        {"bulk": bulk, "boundary_normal": normal, "boundary_flux": flux}, box, order, panels,
        forms_gap=abs(flux - normal),
    )


def symplectic_green(b: GeometricStructure, f, F, G, box: Box, order: int = 8, panels: int = 1) -> IdentityReport:
    """Both equalities for ``omega = f Lambda`` on a symplectic chart::

        int {F,G} omega = -int (F/f){f,G} omega + int_boundary F i_{X_G} omega
                        = -int {F,f}(G/f) omega - int_boundary G i_{X_F} omega

    with ``X_H = gradL H``.  ``residual`` is the larger of the two gaps.
    """
    if not b.is_skew:
        raise PreconditionError(f"structure {b.name} is not skew; symplectic identities do not apply")
    F, G, f = as_scalar(F, b.dim), as_scalar(G, b.dim), as_scalar(f, b.dim)
    lam = liouville_volume(b)
    omega = rescale_volume(lam, f, box.probes())
    lhs = _integral(bracket(b, F, G), omega, box, order, panels)
    bulk1 = _integral(F / f * bracket(b, f, G), omega, box, order, panels)
    bdry1 = integrate_boundary_flux(omega, grad_left(b, G), F, box, order, panels=panels)
    bulk2 = _integral(bracket(b, F, f) * G / f, omega, box, order, panels)
    bdry2 = integrate_boundary_flux(omega, grad_left(b, F), G, box, order, panels=panels)
    rhs1 = -bulk1 + bdry1
    rhs2 = -bulk2 - bdry2
    rep = _report(
        "symplectic_green", lhs, rhs1,
        {"bulk_first": bulk1, "boundary_first": bdry1, "bulk_second": bulk2, "boundary_second": bdry2},
        box, order, panels, rhs_second=rhs2,
    )
    rep.residual = float(max(abs(lhs - rhs1), abs(lhs - rhs2)))
    return rep


def dirichlet_energy(b: GeometricStructure, mu: VolumeForm, F, box: Box, order: int = 8, panels: int = 1) -> float:
    """``E(F) = 1/2 int {F,F}_b dm_mu``; identically zero for skew ``b`` (warned)."""
    if b.is_skew:
        warnings.warn(f"structure {b.name} is skew: the Dirichlet energy vanishes identically", stacklevel=2)
    F = as_scalar(F, b.dim)
    return 0.5 * _integral(bracket(b, F, F), mu, box, order, panels)


def el_residual(b: GeometricStructure, mu: VolumeForm, F, deltaF, box: Box, order: int = 16,
                lam: float = 1e-4, boundary_tol: float = 1e-14, panels: int = 16) -> IdentityReport:
    """First variation of the Dirichlet energy, numeric against analytic.

    numeric  = (E(F + lam dF) - E(F - lam dF)) / (2 lam)
    analytic = -int 1/2 (LapL F + LapR F) dF dm_mu

    ``deltaF`` must vanish on the boundary of ``box``.  The two sides agree
    only after an integration by parts, so the quadrature has to resolve
    the compactly supported variation well; bump variations are smooth but
    flat-topped with steep shoulders, hence the composite default of 16
    panels per axis.
    """
    F, dF = as_scalar(F, b.dim), as_scalar(deltaF, b.dim)
    edge = max(float(np.max(np.abs(dF(pts)))) for _, _, pts, _ in boundary_faces(box, order, panels))
    if edge >= boundary_tol:
        raise PreconditionError(f"variation {dF.label} is not interior supported (boundary value {edge:.3g})")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        numeric = (dirichlet_energy(b, mu, F + lam * dF, box, order, panels) - dirichlet_energy(b, mu, F - lam * dF, box, order, panels)) / (2 * lam)
    el = (laplace_left(b, mu, F) + laplace_right(b, mu, F)) * 0.5
    analytic = -_integral(el * dF, mu, box, order, panels)
    return _report("euler_lagrange", numeric, analytic, {"numeric": numeric, "analytic": analytic}, box, order, panels, lam=lam)
