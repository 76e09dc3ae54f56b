"""Chart-local scalar, vector and matrix fields.

Every field answers ``jet(points, order)`` with a batched :class:`~geomops.jet.Jet`.
Expression fields can deliver up to second derivatives; fields produced by
differential operators lose one order per derivative they consume, which is
tracked in ``max_order``.  Asking a field for more than it can deliver raises
:class:`~geomops.errors.OrderError` when the offending operator is *built*,
so nesting such as ``laplace(laplace(F))`` fails early.
"""

from __future__ import annotations

from numbers import Number
from typing import Callable, Sequence

import numpy as np

from . import exprlang
from . import jet as _jet
from .errors import DimensionError, OrderError

__all__ = [
    "Field",
    "ScalarField",
    "VectorField",
    "MatrixField",
    "DiffeoMap",
    "as_points",
    "scalar",
    "vector",
    "matrix",
    "constant",
    "compose",
    "jacobian",
    "hessian",
]

MAX_ORDER = 2


def as_points(points, dim: int):
    """Normalise to an ``(m, dim)`` float array; also report if input was one point."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise DimensionError(f"expected points of shape (n,) or (m, n) with n={dim}, got {np.shape(points)}")
    return pts, single


def require_order(field: "Field", order: int, what: str = ""):
    if field.max_order < order:
        who = what or field.label
        raise OrderError(
            f"{who} needs derivatives of order {order} from {field.label}, "
            f"which supplies at most {field.max_order}; operator nesting is too deep"
        )


class Field:
    """Closure-backed field on an ``dim``-dimensional chart."""

    shape: tuple = ()

    def __init__(self, dim: int, fn: Callable, max_order: int, label: str = "field"):
        self.dim = int(dim)
        self._fn = fn
        self.max_order = int(max_order)
        self.label = label

    def jet(self, points, order: int = 0) -> _jet.Jet:
        if order > self.max_order:
            raise OrderError(f"{self.label} supplies derivatives up to order {self.max_order}, asked for {order}")
        pts, single = as_points(points, self.dim)
        j = self._fn(pts, order)
        return j[0] if single else j

    def __call__(self, points) -> np.ndarray:
        out = self.jet(points, 0).val
        return float(out) if out.ndim == 0 else out

    def __repr__(self):
        return f"{type(self).__name__}({self.label}, dim={self.dim})"


def _field_of_shape(shape, dim, fn, max_order, label):
    if shape == ():
        return ScalarField(dim, fn, max_order, label)
    if shape == (dim,):
        return VectorField(dim, fn, max_order, label)
    if shape == (dim, dim):
        return MatrixField(dim, fn, max_order, label)
    raise DimensionError(f"unsupported field shape {shape}")


class ScalarField(Field):
    shape = ()

    ast: exprlang.Node | None = None

    def _binary(self, other, op, sym, reflected=False):
        if isinstance(other, Number):
            c = float(other)
            a = self

            def fn(pts, order):
                j = a._fn(pts, order)
                return op(c, j) if reflected else op(j, c)

            lab = f"({c} {sym} {a.label})" if reflected else f"({a.label} {sym} {c})"
            return ScalarField(self.dim, fn, self.max_order, lab)
        if not isinstance(other, ScalarField):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionError("fields live on charts of different dimension")
        a, b = (other, self) if reflected else (self, other)

        def fn(pts, order):
            return op(a._fn(pts, order), b._fn(pts, order))

        return ScalarField(self.dim, fn, min(a.max_order, b.max_order), f"({a.label} {sym} {b.label})")

    def __add__(self, o):
        return self._binary(o, lambda x, y: x + y, "+")

    def __radd__(self, o):
        return self._binary(o, lambda x, y: x + y, "+", True)

    def __sub__(self, o):
        return self._binary(o, lambda x, y: x - y, "-")

    def __rsub__(self, o):
        return self._binary(o, lambda x, y: x - y, "-", True)

    def __mul__(self, o):
        return self._binary(o, lambda x, y: x * y, "*")

    def __rmul__(self, o):
        return self._binary(o, lambda x, y: x * y, "*", True)

    def __truediv__(self, o):
        return self._binary(o, lambda x, y: x / y, "/")

    def __rtruediv__(self, o):
        return self._binary(o, lambda x, y: x / y, "/", True)

    def __neg__(self):
        a = self
        return ScalarField(self.dim, lambda p, k: -a._fn(p, k), self.max_order, f"-{a.label}")

    def apply(self, name: str) -> "ScalarField":
        """``phi(F)`` for ``phi`` in the expression function set or ``"square"``."""
        a = self
        if name == "square":
            return ScalarField(self.dim, lambda p, k: (lambda j: j * j)(a._fn(p, k)), a.max_order, f"{a.label}^2")
        if name not in exprlang.FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")

        def fn(pts, order):
            u = a._fn(pts, order)
            f0, f1, f2 = exprlang._fn_derivs(name, u.val, order, None)
            return _jet.Jet(f0) if order == 0 else _jet.apply(u, f0, f1, f2)

        return ScalarField(self.dim, fn, a.max_order, f"{name}({a.label})")


class VectorField(Field):
    @property
    def shape(self):
        return (self.dim,)

    def __getitem__(self, i: int) -> ScalarField:
        return component(self, (i,))

    def components(self) -> list[ScalarField]:
        return [self[i] for i in range(self.dim)]

    def __add__(self, other: "VectorField") -> "VectorField":
        return _shaped_binary(self, other, lambda x, y: x + y, "+")

    def __sub__(self, other: "VectorField") -> "VectorField":
        return _shaped_binary(self, other, lambda x, y: x - y, "-")

    def scale(self, s) -> "VectorField":
        """Multiply by a number or a scalar field."""
        return _scale(self, s)


class MatrixField(Field):
    @property
    def shape(self):
        return (self.dim, self.dim)

    def __getitem__(self, ij) -> ScalarField:
        return component(self, tuple(ij))

    @property
    def T(self) -> "MatrixField":
        a = self
        return MatrixField(self.dim, lambda p, k: a._fn(p, k).T, a.max_order, f"{a.label}^T")

    def __add__(self, other):
        return _shaped_binary(self, other, lambda x, y: x + y, "+")

    def __sub__(self, other):
        return _shaped_binary(self, other, lambda x, y: x - y, "-")

    def scale(self, s) -> "MatrixField":
        return _scale(self, s)

    def __matmul__(self, other):
        """Pointwise matrix product with another matrix field or a vector field."""
        if other.dim != self.dim:
            raise DimensionError("dimension mismatch")
        a, b = self, other
        if isinstance(other, MatrixField):
            def fn(pts, order):
                A, B = a._fn(pts, order), b._fn(pts, order)
                return (A[..., :, :, None] * B[..., None, :, :]).sum(-2)

            return MatrixField(self.dim, fn, min(a.max_order, b.max_order), f"{a.label}@{b.label}")
        if isinstance(other, VectorField):
            return VectorField(
                self.dim,
                lambda p, k: _jet.matvec(a._fn(p, k), b._fn(p, k)),
                min(a.max_order, b.max_order),
                f"{a.label}@{b.label}",
            )
        return NotImplemented


def _shaped_binary(a: Field, b: Field, op, sym):
    if type(a) is not type(b) and not (isinstance(a, type(b)) or isinstance(b, type(a))):
        raise TypeError("fields of different kinds")
    if a.dim != b.dim:
        raise DimensionError("dimension mismatch")
    return _field_of_shape(
        a.shape, a.dim, lambda p, k: op(a._fn(p, k), b._fn(p, k)), min(a.max_order, b.max_order),
        f"({a.label} {sym} {b.label})",
    )


def _scale(f: Field, s):
    extra = (None,) * len(f.shape)
    if isinstance(s, Number):
        c = float(s)
        return _field_of_shape(f.shape, f.dim, lambda p, k: f._fn(p, k) * c, f.max_order, f"{c}*{f.label}")
    if not isinstance(s, ScalarField):
        raise TypeError("scale factor must be a number or a ScalarField")

    def fn(pts, order):
        return f._fn(pts, order) * s._fn(pts, order)[(Ellipsis,) + extra]

    return _field_of_shape(f.shape, f.dim, fn, min(f.max_order, s.max_order), f"{s.label}*{f.label}")


def component(f: Field, idx: tuple) -> ScalarField:
    sel = (slice(None),) + tuple(idx)
    return ScalarField(f.dim, lambda p, k: f._fn(p, k)[sel], f.max_order, f"{f.label}{list(idx)}")


class DiffeoMap(VectorField):
    """A chart map ``Phi`` given by its components, with an optional declared inverse."""

    def __init__(self, dim, fn, max_order, label="Phi", inverse: "DiffeoMap | None" = None):
        super().__init__(dim, fn, max_order, label)
        self.inverse = inverse

    @classmethod
    def from_exprs(cls, forward: Sequence[str], inverse: Sequence[str] | None = None, label="Phi"):
        dim = len(forward)
        fwd = vector(forward, dim)
        inv = None
        if inverse is not None:
            if len(inverse) != dim:
                raise DimensionError("inverse map must have as many components as the forward map")
            inv = cls(dim, vector(inverse, dim)._fn, MAX_ORDER, f"{label}^-1")
        out = cls(dim, fwd._fn, fwd.max_order, label, inv)
        if inv is not None:
            inv.inverse = out
        return out

    @classmethod
    def from_field(cls, field: VectorField, inverse: VectorField | None = None, label=None):
        label = label or field.label
        inv = None if inverse is None else cls(field.dim, inverse._fn, inverse.max_order, f"{label}^-1")
        out = cls(field.dim, field._fn, field.max_order, label, inv)
        if inv is not None:
            inv.inverse = out
        return out

    def then(self, other: "DiffeoMap") -> "DiffeoMap":
        """``other o self`` (apply ``self`` first)."""
        return other.after(self)

    def after(self, inner: "DiffeoMap") -> "DiffeoMap":
        """Composition ``self o inner``; the inverse is composed too when both exist."""
        comp = compose(self, inner)
        inv = None
        if self.inverse is not None and inner.inverse is not None:
            inv = compose(inner.inverse, self.inverse)
        return DiffeoMap.from_field(comp, inv, f"{self.label}o{inner.label}")

    def inverse_residual(self, points) -> float:
        if self.inverse is None:
            raise ValueError(f"{self.label} has no declared inverse")
        pts, _ = as_points(points, self.dim)
        back = self.inverse(self(pts))
        return float(np.max(np.abs(back - pts)))


def _chain(outer: _jet.Jet, inner: _jet.Jet) -> _jet.Jet:
    """Jet of ``F o Phi`` from the jet of F (at Phi(x), w.r.t. y) and of Phi (w.r.t. x)."""
    order = min(outer.order, inner.order)
    if order == 0:
        return _jet.Jet(outer.val)
    g = np.einsum("m...a,mai->m...i", outer.grad, inner.grad)
    if order == 1:
        return _jet.Jet(outer.val, g)
    h = np.einsum("m...ab,mai,mbj->m...ij", outer.hess, inner.grad, inner.grad) + np.einsum(
        "m...a,maij->m...ij", outer.grad, inner.hess
    )
    return _jet.Jet(outer.val, g, h)


def compose(F: Field, phi: VectorField) -> Field:
    """Pullback ``F o Phi`` of a field of any shape; jets follow the exact chain rule."""
    if phi.shape != (phi.dim,):
        raise DimensionError("inner map must be vector valued")
    if F.dim != phi.dim:
        raise DimensionError(f"cannot compose a field on R^{F.dim} with a map into R^{phi.dim}")

    def fn(pts, order):
        inner = phi._fn(pts, order)
        outer = F._fn(inner.val, order)
        return _chain(outer, inner)

    return _field_of_shape(F.shape, F.dim, fn, min(F.max_order, phi.max_order), f"{F.label}o{phi.label}")


# ------------------------------------------------------------ constructors

def _expr_fn(ast):
    def fn(pts, order):
        return exprlang.eval_jet(ast, pts, order)

    return fn


def scalar(expr, dim: int) -> ScalarField:
    """Scalar field from expression text, an AST, a number, or an existing field."""
    if isinstance(expr, ScalarField):
        if expr.dim != dim:
            raise DimensionError("field dimension mismatch")
        return expr
    if isinstance(expr, Number):
        return constant(float(expr), dim)
    ast = exprlang.parse(expr, dim) if isinstance(expr, str) else expr
    if exprlang.max_coord(ast) > dim:
        raise DimensionError("expression uses coordinates beyond the chart dimension")
    f = ScalarField(dim, _expr_fn(ast), MAX_ORDER, exprlang.format_expr(ast))
    f.ast = ast
    return f


def constant(value: float, dim: int) -> ScalarField:
    v = float(value)

    def fn(pts, order):
        return _jet.constant(np.full(pts.shape[0], v), dim, order)

    return ScalarField(dim, fn, MAX_ORDER, repr(v))


def vector(components: Sequence, dim: int | None = None) -> VectorField:
    dim = len(components) if dim is None else dim
    if len(components) != dim:
        raise DimensionError(f"vector field needs {dim} components, got {len(components)}")
    comps = [scalar(c, dim) for c in components]

    def fn(pts, order):
        return _jet.stack([c._fn(pts, order) for c in comps], axis=1)

    return VectorField(dim, fn, min(c.max_order for c in comps), "[" + ", ".join(c.label for c in comps) + "]")


def matrix(rows: Sequence[Sequence], dim: int | None = None) -> MatrixField:
    dim = len(rows) if dim is None else dim
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise DimensionError(f"matrix field must be {dim}x{dim}")
    grid = [[scalar(c, dim) for c in r] for r in rows]
    if all(g.ast is not None and exprlang.max_coord(g.ast) == 0 for r in grid for g in r):
        return constant_matrix([[g(np.zeros(dim)) for g in r] for r in grid])

    def fn(pts, order):
        rows_j = [_jet.stack([g._fn(pts, order) for g in r], axis=1) for r in grid]
        return _jet.stack(rows_j, axis=1)

    label = "[" + "; ".join(", ".join(g.label for g in r) for r in grid) + "]"
    return MatrixField(dim, fn, MAX_ORDER, label)


def constant_matrix(M) -> MatrixField:
    M = np.asarray(M, dtype=float)
    dim = M.shape[0]
    if M.shape != (dim, dim):
        raise DimensionError("matrix must be square")

    def fn(pts, order):
        return _jet.constant(np.broadcast_to(M, (pts.shape[0], dim, dim)).copy(), dim, order)

    f = MatrixField(dim, fn, MAX_ORDER, np.array2string(M, separator=",").replace("\n", ""))
    f.constant_value = M
    return f


def identity_map(dim: int) -> DiffeoMap:
    def fn(pts, order):
        return _jet.variables(pts, order)

    out = DiffeoMap(dim, fn, MAX_ORDER, "id")
    out.inverse = out
    return out


# ---------------------------------------------------------------- queries

def jacobian(m: VectorField, p) -> np.ndarray:
    """Entry ``(k, i)`` is ``d m^k / d x^i``; batched if ``p`` is (count, n)."""
    return m.jet(p, 1).grad


def hessian(F: ScalarField, p) -> np.ndarray:
    return F.jet(p, 2).hess
