"""Volume forms, divergence and the left/right Laplace-like operators.

A volume form is stored as ``mu = orientation * rho dx^1 ^ ... ^ dx^n`` with
``rho > 0``.  Divergence uses the coordinate formula

    div_mu X = (1/rho) sum_i d_i (rho X^i)

which is the chart expression of ``d(i_X mu) = (div_mu X) mu``.  The
orientation sign cancels in the quotient, so it only matters for integrals.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import jet as _jet
from .box import Box
from .calculus import as_scalar, grad_left, grad_right
from .errors import EvalDomainError, PreconditionError
from .fields import ScalarField, VectorField, as_points, constant, require_order
from .structure import FLAG_TOL, GeometricStructure

__all__ = [
    "VolumeForm",
    "lebesgue",
    "density_volume",
    "divergence",
    "riemannian_volume",
    "liouville_volume",
    "pfaffian",
    "pfaffian_jet",
    "closedness_residual",
    "laplace_left",
    "laplace_right",
    "rescale_volume",
]


class VolumeForm:
    """``orientation * rho dx^1 ^ ... ^ dx^n`` with a positive density field ``rho``."""

    def __init__(self, density: ScalarField, orientation: int = 1, kind: str = "density", box: Box | None = None):
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self.density = density
        self.orientation = orientation
        self.kind = kind
        self.dim = density.dim
        self.box = box or Box.cube(self.dim)

    def __repr__(self):
        sign = "+" if self.orientation > 0 else "-"
        return f"VolumeForm({self.kind}, {sign}{self.density.label})"

    def rho(self, points) -> np.ndarray:
        return self.density(points)

    def signed_density(self, points) -> np.ndarray:
        return self.orientation * self.density(points)

    def check_positive(self, points=None):
        pts = self.box.probes() if points is None else as_points(points, self.dim)[0]
        r = self.density(pts)
        if np.any(~(r > 0)):
            i = int(np.argmin(np.where(np.isfinite(r), r, -np.inf)))
            raise PreconditionError(f"volume density {self.density.label} is not positive at {pts[i].tolist()}")
        return self


def lebesgue(dim: int, box: Box | None = None) -> VolumeForm:
    return VolumeForm(constant(1.0, dim), 1, "lebesgue", box)


def density_volume(rho, dim: int, box: Box | None = None, orientation: int = 1) -> VolumeForm:
    """Volume form with an arbitrary positive density given as an expression or field."""
    return VolumeForm(as_scalar(rho, dim), orientation, "density", box).check_positive()


def _positive(j: _jet.Jet, pts, label):
    bad = ~(j.val > 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise EvalDomainError(f"volume density {label} is not positive at {pts[i].tolist()}")


def divergence(mu: VolumeForm, X: VectorField) -> ScalarField:
    if X.dim != mu.dim:
        raise ValueError("vector field and volume form live on different charts")
    rho = mu.density
    require_order(X, 1, "divergence")
    require_order(rho, 1, "divergence")

    def fn(pts, order):
        r = rho._fn(pts, order + 1)
        _positive(r, pts, rho.label)
        flux = X._fn(pts, order + 1) * r[:, None]
        return flux.derivative().trace() / r.truncate(order)

    return ScalarField(mu.dim, fn, min(X.max_order, rho.max_order) - 1, f"div({X.label})")


def _sqrt_jet(j: _jet.Jet) -> _jet.Jet:
    s = np.sqrt(j.val)
    return _jet.apply(j, s, 0.5 / s, -0.25 / (s * j.val))


def riemannian_volume(g: GeometricStructure) -> VolumeForm:
    """``rho = sqrt(det G)``; ``g`` must be symmetric positive definite at the probes."""
    pts = g.probes()
    Gv = g.matrix(pts)
    if np.max(np.abs(Gv - np.swapaxes(Gv, -1, -2))) > FLAG_TOL * max(1.0, np.max(np.abs(Gv))):
        raise PreconditionError(f"metric {g.name} is not symmetric")
    ev = np.linalg.eigvalsh(Gv)
    if np.min(ev) <= 0:
        i = int(np.argmin(ev.min(axis=1)))
        raise PreconditionError(f"metric {g.name} is not positive definite at {pts[i].tolist()}")

    def fn(p, order):
        d = _jet.det(g.matrix._fn(p, order))
        if np.any(d.val <= 0):
            i = int(np.flatnonzero(d.val <= 0)[0])
            raise EvalDomainError(f"det of metric {g.name} is not positive at {p[i].tolist()}")
        return _sqrt_jet(d)

    rho = ScalarField(g.dim, fn, g.matrix.max_order, f"sqrt|{g.name}|")
    return VolumeForm(rho, 1, "riemannian", g.box)


def pfaffian_jet(A: _jet.Jet) -> _jet.Jet:
    """Pfaffian of a batch of skew matrix jets by expansion along the first row."""
    k = A.val.shape[-1]

    def rec(idx):
        if not idx:
            return None
        if len(idx) == 2:
            return A[:, idx[0], idx[1]]
        i0, rest = idx[0], idx[1:]
        total = None
        for pos, j in enumerate(rest):
            minor = rec([r for r in rest if r != j])
            term = A[:, i0, j] * minor
            if pos % 2:
                term = -term
            total = term if total is None else total + term
        return total

    if k % 2:
        raise PreconditionError("Pfaffian needs an even dimension")
    return rec(list(range(k)))


def pfaffian(M) -> np.ndarray | float:
    """Numeric Pfaffian of one ``(k, k)`` skew matrix or a batch ``(m, k, k)``."""
    M = np.asarray(M, dtype=float)
    single = M.ndim == 2
    out = pfaffian_jet(_jet.Jet(M[None] if single else M)).val
    return float(out[0]) if single else out


def closedness_residual(b: GeometricStructure, points=None) -> float:
    """Max of ``|d_i B_jk + d_j B_ki + d_k B_ij|`` at the points (the chart form of ``db``)."""
    pts = b.probes() if points is None else as_points(points, b.dim)[0]
    dB = b.matrix.jet(pts, 1).grad  # (m, j, k, i)
    c = (
        np.einsum("mjki->mijk", dB)
        + np.einsum("mkij->mijk", dB)
        + np.einsum("mijk->mijk", dB)
    )
    return float(np.max(np.abs(c)))


def liouville_volume(b: GeometricStructure, closed_tol: float = 1e-9) -> VolumeForm:
    """``Lambda`` with signed density ``(-1)^[n/2] Pf(B)`` on a ``2n``-dimensional chart.

    A non-closed skew structure (almost symplectic) gives a warning but the
    volume is still produced.
    """
    dim = b.dim
    if dim % 2:
        raise PreconditionError(f"Liouville volume needs an even dimension, got {dim}")
    if not b.is_skew:
        raise PreconditionError(f"structure {b.name} is not skew at the probes")
    res = closedness_residual(b)
    if res > closed_tol:
        warnings.warn(f"structure {b.name} is not closed (residual {res:.3g}); almost symplectic volume", stacklevel=2)
    n = dim // 2
    sign = -1.0 if (n // 2) % 2 else 1.0

    pts = b.probes()
    s = sign * pfaffian(b.matrix(pts))
    if np.all(s > 0):
        orientation = 1
    elif np.all(s < 0):
        orientation = -1
    else:
        raise PreconditionError(f"Pfaffian of {b.name} vanishes or changes sign across probes")
    det = np.linalg.det(b.matrix(pts))
    if np.max(np.abs(s * s - det)) > 1e-9 * max(1.0, np.max(np.abs(det))):
        raise PreconditionError("Pfaffian squared does not match the determinant")

    def fn(p, order):
        return pfaffian_jet(b.matrix._fn(p, order)) * (sign * orientation)

    rho = ScalarField(dim, fn, b.matrix.max_order, f"Pf({b.name})")
    return VolumeForm(rho, orientation, "liouville", b.box)


def laplace_left(b: GeometricStructure, mu: VolumeForm, F) -> ScalarField:
    """``div_mu(grad_left F)``."""
    out = divergence(mu, grad_left(b, F))
    out.label = f"LapL({as_scalar(F, b.dim).label})"
    return out


def laplace_right(b: GeometricStructure, mu: VolumeForm, F) -> ScalarField:
    """``div_mu(grad_right F)``."""
    out = divergence(mu, grad_right(b, F))
    out.label = f"LapR({as_scalar(F, b.dim).label})"
    return out


def rescale_volume(mu: VolumeForm, f, points=None) -> VolumeForm:
    """``omega = f mu``; ``f`` must keep one sign, which is folded into the orientation."""
    f = as_scalar(f, mu.dim)
    pts = mu.box.probes() if points is None else as_points(points, mu.dim)[0]
    fv = f(pts)
    if np.all(fv > 0):
        s = 1
    elif np.all(fv < 0):
        s = -1
    else:
        raise PreconditionError(f"rescaling factor {f.label} vanishes or changes sign across probes")
    rho = mu.density * f if s > 0 else mu.density * (-f)
    return VolumeForm(rho, mu.orientation * s, "density", mu.box)
