"""Batched second-order jets (hyper-dual numbers).

A :class:`Jet` stores a value together with its gradient and Hessian with
respect to the ``n`` chart coordinates.  All three slots carry a common
leading *batch* shape, so one jet can represent a scalar field sampled at
``m`` points (batch ``(m,)``), a vector field (batch ``(m, n)``) or a matrix
field (batch ``(m, n, n)``)::

    val.shape  == batch
    grad.shape == batch + (n,)
    hess.shape == batch + (n, n)

Jets are truncated: ``grad`` and ``hess`` may be ``None`` when only lower
order information was requested.  Arithmetic propagates the minimum order
of its operands.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Jet",
    "constant",
    "variables",
    "apply",
    "stack",
    "matvec",
    "dot",
    "solve",
    "inverse",
    "matmul",
    "det",
]


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


class Jet:
    """Truncated Taylor jet of order 0, 1 or 2 over a batch of points."""

    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 100  # keep numpy from hijacking reflected ops

    def __init__(self, val, grad=None, hess=None):
        self.val = np.asarray(val, dtype=float)
        self.grad = None if grad is None else np.asarray(grad, dtype=float)
        self.hess = None if hess is None or grad is None else np.asarray(hess, dtype=float)

    @property
    def order(self) -> int:
        if self.grad is None:
            return 0
        return 1 if self.hess is None else 2

    @property
    def batch(self) -> tuple:
        return self.val.shape

    def __repr__(self):
        return f"Jet(order={self.order}, batch={self.batch})"

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        if order == 0:
            return Jet(self.val)
        return Jet(self.val, self.grad)

    def derivative(self) -> "Jet":
        """Jet of the gradient: batch grows by one axis, order drops by one."""
        if self.grad is None:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet(self.grad, self.hess)

    # -- indexing and shape manipulation (acts on batch axes only) --

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if Ellipsis not in idx:
            idx = idx + (Ellipsis,)
        g = None if self.grad is None else self.grad[idx + (slice(None),)]
        h = None if self.hess is None else self.hess[idx + (slice(None), slice(None))]
        # numpy places the extra slices after the ellipsis, i.e. on the
        # trailing derivative axes, so the batch indexing is unchanged.
        return Jet(self.val[idx], g, h)

    @property
    def T(self) -> "Jet":
        """Swap the last two batch axes (matrix transpose)."""
        g = None if self.grad is None else np.swapaxes(self.grad, -2, -3)
        h = None if self.hess is None else np.swapaxes(self.hess, -3, -4)
        return Jet(np.swapaxes(self.val, -1, -2), g, h)

    def sum(self, axis: int) -> "Jet":
        axis = axis % self.val.ndim
        g = None if self.grad is None else self.grad.sum(axis)
        h = None if self.hess is None else self.hess.sum(axis)
        return Jet(self.val.sum(axis), g, h)

    def trace(self) -> "Jet":
        g = None if self.grad is None else np.einsum("...iil->...l", self.grad)
        h = None if self.hess is None else np.einsum("...iilm->...lm", self.hess)
        return Jet(np.einsum("...ii->...", self.val), g, h)

    # -- arithmetic --

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return None

    def __neg__(self):
        g = None if self.grad is None else -self.grad
        h = None if self.hess is None else -self.hess
        return Jet(-self.val, g, h)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            c = np.asarray(other, dtype=float)
            return Jet(self.val + c, self.grad, self.hess)
        order = min(self.order, o.order)
        g = h = None
        if order >= 1:
            g = self.grad + o.grad
        if order >= 2:
            h = self.hess + o.hess
        return Jet(self.val + o.val, g, h)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            c = np.asarray(other, dtype=float)
            g = None if self.grad is None else self.grad * c[..., None]
            h = None if self.hess is None else self.hess * c[..., None, None]
            return Jet(self.val * c, g, h)
        order = min(self.order, o.order)
        a, b = self, o
        g = h = None
        if order >= 1:
            g = a.grad * b.val[..., None] + a.val[..., None] * b.grad
        if order >= 2:
            h = (
                a.hess * b.val[..., None, None]
                + a.val[..., None, None] * b.hess
                + (_outer(a.grad, b.grad) + _outer(b.grad, a.grad))
            )
        return Jet(a.val * b.val, g, h)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        v = self.val
        return apply(self, 1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            c = np.asarray(other, dtype=float)
            g = None if self.grad is None else self.grad / c[..., None]
            h = None if self.hess is None else self.hess / c[..., None, None]
            return Jet(self.val / c, g, h)
        # quotient rule written so the value slot is exactly a / b
        order = min(self.order, o.order)
        q = self.val / o.val
        g = h = None
        if order >= 1:
            g = (self.grad - q[..., None] * o.grad) / o.val[..., None]
        if order >= 2:
            h = (
                self.hess
                - _outer(g, o.grad)
                - _outer(o.grad, g)
                - q[..., None, None] * o.hess
            ) / o.val[..., None, None]
        return Jet(q, g, h)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def ipow(self, k: int) -> "Jet":
        """Integer power by repeated multiplication (binary exponentiation)."""
        if k < 0:
            return self.ipow(-k).reciprocal()
        result = None
        base = self
        while k:
            if k & 1:
                result = base if result is None else result * base
            k >>= 1
            if k:
                base = base * base
        if result is None:
            return constant(np.ones_like(self.val), self.nvars, self.order)
        return result

    @property
    def nvars(self) -> int:
        if self.grad is None:
            raise ValueError("order-0 jet does not record the number of variables")
        return self.grad.shape[-1]


def constant(val, n: int, order: int) -> Jet:
    """Jet of a quantity that does not depend on the coordinates."""
    val = np.asarray(val, dtype=float)
    g = np.zeros(val.shape + (n,)) if order >= 1 else None
    h = np.zeros(val.shape + (n, n)) if order >= 2 else None
    return Jet(val, g, h)


def variables(points, order: int) -> Jet:
    """Seed jet for the coordinates themselves; ``points`` has shape (m, n)."""
    points = np.asarray(points, dtype=float)
    m, n = points.shape
    g = np.broadcast_to(np.eye(n), (m, n, n)).copy() if order >= 1 else None
    h = np.zeros((m, n, n, n)) if order >= 2 else None
    return Jet(points, g, h)


def apply(u: Jet, f0, f1, f2) -> Jet:
    """Compose a univariate function with a jet given f, f', f'' at ``u.val``."""
    g = h = None
    if u.order >= 1:
        g = f1[..., None] * u.grad
    if u.order >= 2:
        h = f1[..., None, None] * u.hess + f2[..., None, None] * _outer(u.grad, u.grad)
    return Jet(f0, g, h)


def stack(jets, axis: int = -1) -> Jet:
    """Stack jets along a new batch axis (negative axes count in the result batch)."""
    nd = jets[0].val.ndim + 1
    axis = axis % nd
    order = min(j.order for j in jets)
    jets = [j.truncate(order) for j in jets]
    v = np.stack([j.val for j in jets], axis=axis)
    g = np.stack([j.grad for j in jets], axis=axis) if order >= 1 else None
    h = np.stack([j.hess for j in jets], axis=axis) if order >= 2 else None
    return Jet(v, g, h)


def matvec(A: Jet, x: Jet) -> Jet:
    """Batched ``A @ x`` for matrix jet (..., n, n) and vector jet (..., n)."""
    order = min(A.order, x.order)
    v = np.einsum("...ij,...j->...i", A.val, x.val)
    g = h = None
    if order >= 1:
        g = np.einsum("...ijl,...j->...il", A.grad, x.val) + np.einsum(
            "...ij,...jl->...il", A.val, x.grad
        )
    if order >= 2:
        cross = np.einsum("...ijl,...jm->...ilm", A.grad, x.grad)
        h = (
            np.einsum("...ijlm,...j->...ilm", A.hess, x.val)
            + np.einsum("...ij,...jlm->...ilm", A.val, x.hess)
            + cross
            + np.swapaxes(cross, -1, -2)
        )
    return Jet(v, g, h)


def dot(x: Jet, y: Jet) -> Jet:
    """Batched inner product over the last batch axis."""
    return (x * y).sum(-1)


def solve(A: Jet, b: Jet) -> Jet:
    """Jet of ``u = A^{-1} b`` obtained by successive linear solves.

    Differentiating ``A u = b`` gives ``A du = db - dA u`` and
    ``A d2u = d2b - dA du - (dA du)^T - d2A u``; each order reuses the
    value-level matrix, never forming ``A^{-1}`` explicitly.
    """
    order = min(A.order, b.order)
    Av = A.val
    u = np.linalg.solve(Av, b.val[..., None])[..., 0]
    if order == 0:
        return Jet(u)
    rhs1 = b.grad - np.einsum("...ijl,...j->...il", A.grad, u)
    du = np.linalg.solve(Av, rhs1)
    if order == 1:
        return Jet(u, du)
    cross = np.einsum("...ijl,...jm->...ilm", A.grad, du)
    rhs2 = b.hess - cross - np.swapaxes(cross, -1, -2) - np.einsum("...ijlm,...j->...ilm", A.hess, u)
    n = rhs2.shape[-1]
    shp = rhs2.shape
    d2u = np.linalg.solve(Av, rhs2.reshape(shp[:-2] + (n * n,))).reshape(shp)
    return Jet(u, du, d2u)


def inverse(A: Jet) -> Jet:
    """Jet of the matrix inverse (used where the inverse itself is the output)."""
    V = np.linalg.inv(A.val)
    if A.order == 0:
        return Jet(V)
    dV = -np.einsum("...ij,...jkl,...km->...iml", V, A.grad, V)
    if A.order == 1:
        return Jet(V, dV)
    # d2V_lm = -V (d2A_lm V + dA_l dV_m + dA_m dV_l)
    t = np.einsum("...ijlm,...jk->...iklm", A.hess, V)
    c = np.einsum("...ijl,...jkm->...iklm", A.grad, dV)
    t = t + c + np.swapaxes(c, -1, -2)
    d2V = -np.einsum("...ij,...jklm->...iklm", V, t)
    return Jet(V, dV, d2V)


def matmul(A: Jet, B: Jet) -> Jet:
    """Batched matrix product of two matrix jets (..., n, n)."""
    order = min(A.order, B.order)
    v = A.val @ B.val
    g = h = None
    if order >= 1:
        g = np.einsum("...ijl,...jk->...ikl", A.grad, B.val) + np.einsum(
            "...ij,...jkl->...ikl", A.val, B.grad
        )
    if order >= 2:
        cross = np.einsum("...ijl,...jkm->...iklm", A.grad, B.grad)
        h = (
            np.einsum("...ijlm,...jk->...iklm", A.hess, B.val)
            + np.einsum("...ij,...jklm->...iklm", A.val, B.hess)
            + cross
            + np.swapaxes(cross, -1, -2)
        )
    return Jet(v, g, h)


def det(A: Jet) -> Jet:
    """Determinant jet via Jacobi's formula ``d det = det tr(A^{-1} dA)``."""
    d = np.linalg.det(A.val)
    if A.order == 0:
        return Jet(d)
    V = np.linalg.inv(A.val)
    W = np.einsum("...ij,...jkl->...ikl", V, A.grad)  # A^{-1} dA_l
    t = np.einsum("...iil->...l", W)
    g = d[..., None] * t
    if A.order == 1:
        return Jet(d, g)
    # d2 det = det (t_l t_m - tr(W_l W_m) + tr(A^{-1} d2A_lm))
    ww = np.einsum("...ijl,...jim->...lm", W, W)
    tr2 = np.einsum("...ij,...jilm->...lm", V, A.hess)
    h = d[..., None, None] * (t[..., :, None] * t[..., None, :] - ww + tr2)
    return Jet(d, g, h)
