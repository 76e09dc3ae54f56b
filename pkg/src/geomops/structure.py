"""Geometric structures: non-degenerate (0,2)-tensor fields given by a matrix field.

In a chart a structure ``b`` is the invertible matrix field ``B`` with
``B_ij = b(d/dx^i, d/dx^j)``, so ``b(X, Y) = X^T B Y`` pointwise.  Nothing
about symmetry is assumed; symmetric (metrics), skew (almost symplectic) and
generic structures all go through the same code.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import jet as _jet
from .box import Box
from .errors import PreconditionError, SingularMatrixError
from .fields import MatrixField, VectorField, as_points, constant_matrix, matrix

__all__ = [
    "GeometricStructure",
    "GeometricPair",
    "NondegeneracyReport",
    "DefinitenessReport",
    "structure",
    "evaluate",
    "check_nondegenerate",
    "sym_part",
    "skew_part",
    "opposite",
    "induced_left",
    "induced_right",
    "geometric_pair",
    "adjoint_left",
    "adjoint_right",
    "adjoint_metric",
    "definiteness_probe",
    "checked_matrix",
]

FLAG_PROBES = 32
FLAG_TOL = 1e-12
COND_LIMIT = 1e12


def checked_matrix(Bv: np.ndarray, pts: np.ndarray, what: str = "structure matrix"):
    """Raise if any matrix in the batch is singular or too ill-conditioned to solve with."""
    if not np.all(np.isfinite(Bv)):
        bad = np.flatnonzero(~np.all(np.isfinite(Bv), axis=(-1, -2)))[0]
        raise SingularMatrixError(f"{what} is not finite at {pts[bad].tolist()}", pts[bad].tolist())
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.linalg.cond(Bv)
    bad = ~np.isfinite(cond) | (cond > COND_LIMIT)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise SingularMatrixError(
            f"{what} is singular or near-singular (condition number {cond[i]:.3g}) at {pts[i].tolist()}",
            pts[i].tolist(),
        )


class GeometricStructure:
    """A (0,2)-tensor field with probe-detected symmetry flags.

    ``box`` is only used to place the probe points for flag detection and
    default non-degeneracy checks; all operators accept any point.
    """

    def __init__(self, B: MatrixField, box: Box | None = None, name: str | None = None):
        self.matrix = B
        self.dim = B.dim
        self.box = box or Box.cube(self.dim)
        self.name = name or B.label
        self._flags = None

    def __repr__(self):
        return f"GeometricStructure({self.name}, dim={self.dim})"

    def __call__(self, points) -> np.ndarray:
        return self.matrix(points)

    def probes(self, count: int = FLAG_PROBES) -> np.ndarray:
        return self.box.probes(count)

    @property
    def flags(self) -> dict:
        """``{"symmetric", "skew", "constant"} -> "yes" | "no" | "unknown"``."""
        if self._flags is None:
            try:
                Bv = self.matrix(self.probes())
            except ArithmeticError:
                self._flags = dict.fromkeys(("symmetric", "skew", "constant"), "unknown")
            else:
                Bt = np.swapaxes(Bv, -1, -2)
                yn = lambda ok: "yes" if ok else "no"
                self._flags = {
                    "symmetric": yn(np.max(np.abs(Bv - Bt)) <= FLAG_TOL),
                    "skew": yn(np.max(np.abs(Bv + Bt)) <= FLAG_TOL),
                    "constant": yn(np.max(np.abs(Bv - Bv[:1])) <= FLAG_TOL),
                }
        return self._flags

    @property
    def is_symmetric(self) -> bool:
        return self.flags["symmetric"] == "yes"

    @property
    def is_skew(self) -> bool:
        return self.flags["skew"] == "yes"

    @property
    def is_constant(self) -> bool:
        return self.flags["constant"] == "yes"

    def values(self, pts: np.ndarray, order: int = 0) -> _jet.Jet:
        """Matrix jet at ``(m, n)`` points, conditioning checked."""
        j = self.matrix._fn(pts, order)
        checked_matrix(j.val, pts, f"structure {self.name}")
        return j


def structure(spec, dim: int | None = None, box: Box | None = None, name: str | None = None) -> GeometricStructure:
    """Build a structure from a grid of expressions / numbers or a ready MatrixField."""
    if isinstance(spec, GeometricStructure):
        return spec
    if isinstance(spec, MatrixField):
        B = spec
    elif isinstance(spec, np.ndarray) and spec.dtype != object:
        B = constant_matrix(spec)
    else:
        B = matrix(spec, dim)
    return GeometricStructure(B, box, name)


def _vec(v, pts):
    if isinstance(v, VectorField):
        return v(pts)
    return np.broadcast_to(np.asarray(v, dtype=float), pts.shape)


def evaluate(b: GeometricStructure, X, Y, p) -> np.ndarray | float:
    """``b(X, Y)`` at ``p``; ``X`` and ``Y`` may be vector fields or constant vectors."""
    pts, single = as_points(p, b.dim)
    Bv = b.matrix(pts)
    out = np.einsum("mi,mij,mj->m", _vec(X, pts), Bv, _vec(Y, pts))
    return float(out[0]) if single else out


@dataclass
class NondegeneracyReport:
    min_abs_det: float
    worst_point: list
    probes: int
    tol: float
    passed: bool


def check_nondegenerate(b: GeometricStructure, points=None, tol: float = 1e-12) -> NondegeneracyReport:
    pts = b.probes() if points is None else as_points(points, b.dim)[0]
    if len(pts) == 0:
        raise ValueError("need at least one probe point")
    d = np.abs(np.linalg.det(b.matrix(pts)))
    i = int(np.argmin(d))
    return NondegeneracyReport(float(d[i]), pts[i].tolist(), len(pts), tol, bool(d[i] > tol))


def _derived(b: GeometricStructure, B: MatrixField, suffix: str) -> GeometricStructure:
    return GeometricStructure(B, b.box, f"{b.name}.{suffix}")


def sym_part(b: GeometricStructure) -> GeometricStructure:
    return _derived(b, (b.matrix + b.matrix.T).scale(0.5), "sym")


def skew_part(b: GeometricStructure) -> GeometricStructure:
    return _derived(b, (b.matrix - b.matrix.T).scale(0.5), "skew")


def opposite(b: GeometricStructure) -> GeometricStructure:
    return _derived(b, b.matrix.T, "op")


def _require_nondegenerate(T: MatrixField, b: GeometricStructure, what: str):
    pts = b.probes()
    d = np.abs(np.linalg.det(T(pts)))
    if np.min(d) <= FLAG_TOL:
        i = int(np.argmin(d))
        raise PreconditionError(f"{what} is degenerate at probe {pts[i].tolist()}")


def induced_left(b: GeometricStructure, T: MatrixField) -> GeometricStructure:
    """``b_T^L(X, Y) = b(TX, Y)``, matrix ``T^T B``."""
    _require_nondegenerate(T, b, "tensor T")
    return _derived(b, T.T @ b.matrix, f"left[{T.label}]")


def induced_right(b: GeometricStructure, T: MatrixField) -> GeometricStructure:
    """``b_T^R(X, Y) = b(X, TY)``, matrix ``B T``."""
    _require_nondegenerate(T, b, "tensor T")
    return _derived(b, b.matrix @ T, f"right[{T.label}]")


def _inverse_field(b: GeometricStructure) -> MatrixField:
    def fn(pts, order):
        return _jet.inverse(b.values(pts, order))

    return MatrixField(b.dim, fn, b.matrix.max_order, f"{b.name}^-1")


def _as_matrix_field(A, dim) -> MatrixField:
    if isinstance(A, MatrixField):
        return A
    if isinstance(A, GeometricStructure):
        return A.matrix
    arr = np.asarray(A)
    if arr.dtype != object and np.issubdtype(arr.dtype, np.number):
        return constant_matrix(arr)
    return matrix(A, dim)


@dataclass
class GeometricPair:
    """``(b, B_g)`` with ``g(X, Y) = b(X, B_g Y)``."""

    b: GeometricStructure
    g: GeometricStructure
    B_g: MatrixField
    residual: float = 0.0
    probes: int = 0
    meta: dict = dc_field(default_factory=dict)


def _require_spd(g: GeometricStructure, pts):
    Gv = g.matrix(pts)
    asym = np.max(np.abs(Gv - np.swapaxes(Gv, -1, -2)))
    if asym > 1e-12 * max(1.0, np.max(np.abs(Gv))):
        raise PreconditionError(f"metric {g.name} is not symmetric (asymmetry {asym:.3g})")
    ev = np.linalg.eigvalsh(Gv)
    if np.min(ev) <= 0:
        i = int(np.argmin(ev.min(axis=1)))
        raise PreconditionError(f"metric {g.name} is not positive definite at {pts[i].tolist()}")


def geometric_pair(b: GeometricStructure, g: GeometricStructure, points=None) -> GeometricPair:
    pts = b.probes() if points is None else as_points(points, b.dim)[0]
    _require_spd(g, pts)
    Bg = _inverse_field(b) @ g.matrix
    Bg.label = f"B_g[{b.name},{g.name}]"
    # defining relation g = B B_g as matrices
    res = float(np.max(np.abs(g.matrix(pts) - b.matrix(pts) @ Bg(pts))))
    return GeometricPair(b, g, Bg, res, len(pts))


def adjoint_left(b: GeometricStructure, A) -> MatrixField:
    """``A^{*L} = B^{-T} A^T B^T``, so that ``b(A^{*L} X, Y) = b(X, A Y)``."""
    A = _as_matrix_field(A, b.dim)
    Binv = _inverse_field(b)
    out = Binv.T @ A.T @ b.matrix.T
    out.label = f"{A.label}^*L"
    return out


def adjoint_right(b: GeometricStructure, A) -> MatrixField:
    """``A^{*R} = B^{-1} A^T B``, so that ``b(A X, Y) = b(X, A^{*R} Y)``."""
    A = _as_matrix_field(A, b.dim)
    out = _inverse_field(b) @ A.T @ b.matrix
    out.label = f"{A.label}^*R"
    return out


def adjoint_metric(g: GeometricStructure, A) -> MatrixField:
    """Adjoint with respect to a metric: ``G^{-1} A^T G`` (both sides agree)."""
    return adjoint_right(g, A)


@dataclass
class DefinitenessReport:
    classification: str  # positive | negative | indefinite | degenerate-sample
    min_form: float
    max_form: float
    min_sym_eig: float
    max_sym_eig: float
    probes: int
    vectors: int
    note: str = "sampling evidence, not a proof"


def definiteness_probe(b: GeometricStructure, points=None, vectors=None, tol: float = 1e-12) -> DefinitenessReport:
    """Classify ``b(v, v)`` over sampled points and vectors; also report the spectrum of ``B_sym``."""
    pts = b.probes() if points is None else as_points(points, b.dim)[0]
    if vectors is None:
        rng = np.random.default_rng(0)
        vectors = np.vstack([np.eye(b.dim), rng.standard_normal((16, b.dim))])
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if np.any(np.linalg.norm(V, axis=1) == 0):
        raise ValueError("probe vectors must be nonzero")
    Bv = b.matrix(pts)
    q = np.einsum("ki,mij,kj->mk", V, Bv, V)
    ev = np.linalg.eigvalsh(0.5 * (Bv + np.swapaxes(Bv, -1, -2)))
    # classification rests on the sampled quadratic form only; the sym-part
    # spectrum is reported as supporting evidence
    scale = max(1.0, float(np.max(np.abs(q))))
    pos = q > tol * scale
    neg = q < -tol * scale
    if np.any(pos) and np.any(neg):
        cls = "indefinite"
    elif np.all(pos):
        cls = "positive"
    elif np.all(neg):
        cls = "negative"
    else:
        cls = "degenerate-sample"
    return DefinitenessReport(cls, float(q.min()), float(q.max()), float(ev.min()), float(ev.max()), len(pts), len(V))
