"""Builtin structures with default boxes, volumes, function pools and morphisms.

Every entry can be named in scenario files and on the command line, either
bare (``"shear2"``) or with its parameter (``"euclidean(3)"``,
``"canonical-symplectic(4)"``, ``"mixed(0.25)"``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import jet as _jet
from .box import Box
from .fields import DiffeoMap, ScalarField, constant_matrix, matrix, scalar
from .measure import VolumeForm, lebesgue, liouville_volume, riemannian_volume
from .structure import GeometricStructure

__all__ = ["CatalogEntry", "bump", "get", "names", "entries", "parse_name", "DEFAULTS"]


def bump(center, radius: float, dim: int | None = None) -> ScalarField:
    """``exp(1 - 1/(1 - s))`` with ``s = |x - c|^2 / r^2`` inside the ball, 0 outside.

    Value 1 at the centre, flat there, and smooth across the sphere ``s = 1``.
    """
    c = np.asarray(center, dtype=float)
    dim = len(c) if dim is None else dim
    if c.shape != (dim,):
        raise ValueError("bump centre must have one coordinate per chart dimension")
    R = float(radius)
    if not R > 0:
        raise ValueError("bump radius must be positive")

    def fn(pts, order):
        d = pts - c
        s = np.sum(d * d, axis=1) / R**2
        inside = s < 1
        t = np.where(inside, 1.0 - s, 1.0)
        phi = np.where(inside, np.exp(1.0 - 1.0 / t), 0.0)
        if order == 0:
            return _jet.Jet(phi)
        # derivatives of phi as a function of s
        p1 = np.where(inside, -phi / t**2, 0.0)
        p2 = np.where(inside, phi * (1.0 / t**4 - 2.0 / t**3), 0.0)
        hs = np.broadcast_to(2.0 * np.eye(dim) / R**2, (len(pts), dim, dim)) if order >= 2 else None
        return _jet.apply(_jet.Jet(s, 2.0 * d / R**2, hs), phi, p1, p2)

    label = f"bump({','.join(f'{v:g}' for v in c)};{R:g})"
    return ScalarField(dim, fn, 2, label)


@dataclass
class CatalogEntry:
    name: str
    dim: int
    structure: GeometricStructure
    volume: VolumeForm
    box: Box
    metric: GeometricStructure | None = None
    functions: dict = dc_field(default_factory=dict)
    polynomials: list = dc_field(default_factory=list)
    morphisms: dict = dc_field(default_factory=dict)
    params: dict = dc_field(default_factory=dict)
    notes: str = ""

    def pool(self, count: int | None = None) -> list:
        """Pool functions in a fixed order (coordinates first)."""
        fs = list(self.functions.values())
        return fs if count is None else fs[:count]

    def summary(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "params": self.params,
            "box": self.box.to_flat(),
            "volume": self.volume.kind,
            "metric": self.metric is not None,
            "flags": self.structure.flags,
            "functions": list(self.functions),
            "morphisms": list(self.morphisms),
            "notes": self.notes,
        }


def _coords(dim):
    return [f"x{i + 1}" for i in range(dim)]


def _sum_sq(dim):
    return " + ".join(f"{x}^2" for x in _coords(dim))


def _pools(dim: int, box: Box, extra: dict | None = None):
    funcs = {x: scalar(x, dim) for x in _coords(dim)}
    funcs["sumsq"] = scalar(_sum_sq(dim), dim)
    polys = []
    if dim == 1:
        polys = ["x1^3 - 2*x1", "x1^4 + x1^2"]
    else:
        polys = [
            "x1^2*x2 - x2^3/3 + x1",
            "x1*x2 + 2*x1^3 - x2^2",
        ]
        if dim >= 3:
            polys.append("x1*x2*x3 + x3^2")
        if dim >= 4:
            polys.append("x1*x3 - x2*x4^2 + x4^3")
    polys = [scalar(p, dim) for p in polys]
    for i, p in enumerate(polys):
        funcs[f"poly{i + 1}"] = p
    if dim == 1:
        funcs["smooth"] = scalar("sin(x1) + exp(x1/2)", dim)
    else:
        funcs["smooth"] = scalar("sin(x1)*cos(x2) + exp(0.3*x1)", dim)
    for k, v in (extra or {}).items():
        funcs[k] = scalar(v, dim)
    c = box.center
    r = 0.3 * float(np.min(np.subtract(box.upper, box.lower)))
    funcs["bump"] = bump(c, r, dim)
    return funcs, polys


def _map(forward, inverse, label):
    return DiffeoMap.from_exprs(forward, inverse, label)


def _translation(dim, shift, label="translate"):
    fwd = [f"{x} + {s!r}" for x, s in zip(_coords(dim), shift)]
    inv = [f"{x} - {s!r}" for x, s in zip(_coords(dim), shift)]
    return _map(fwd, inv, label)


def _rotation(dim, angle, i=0, j=1, label="rotate"):
    c, s = math.cos(angle), math.sin(angle)
    xs = _coords(dim)
    fwd, inv = list(xs), list(xs)
    fwd[i] = f"{c!r}*{xs[i]} - {s!r}*{xs[j]}"
    fwd[j] = f"{s!r}*{xs[i]} + {c!r}*{xs[j]}"
    inv[i] = f"{c!r}*{xs[i]} + {s!r}*{xs[j]}"
    inv[j] = f"-{s!r}*{xs[i]} + {c!r}*{xs[j]}"
    return _map(fwd, inv, label)


def _euclidean(dim: int = 2):
    box = Box.cube(dim)
    b = GeometricStructure(constant_matrix(np.eye(dim)), box, f"euclidean({dim})")
    funcs, polys = _pools(dim, box)
    morph = {"translate": _translation(dim, [0.25] + [-0.5] * (dim - 1))}
    if dim >= 2:
        morph["rotate"] = _rotation(dim, 0.7)
    return CatalogEntry(
        f"euclidean({dim})", dim, b, lebesgue(dim, box), box, b, funcs, polys, morph, {"dim": dim},
        "flat metric; both Laplacians are the ordinary Laplacian",
    )


def _minkowski(dim: int = 2):
    if dim < 2:
        raise ValueError("minkowski needs dim >= 2")
    box = Box.cube(dim)
    B = np.eye(dim)
    B[0, 0] = -1.0
    b = GeometricStructure(constant_matrix(B), box, f"minkowski({dim})")
    funcs, polys = _pools(dim, box)
    ch, sh = math.cosh(0.4), math.sinh(0.4)
    xs = _coords(dim)
    fwd = [f"{ch!r}*x1 + {sh!r}*x2", f"{sh!r}*x1 + {ch!r}*x2"] + xs[2:]
    inv = [f"{ch!r}*x1 - {sh!r}*x2", f"-{sh!r}*x1 + {ch!r}*x2"] + xs[2:]
    morph = {"translate": _translation(dim, [0.25] + [-0.5] * (dim - 1)), "boost": _map(fwd, inv, "boost")}
    g = GeometricStructure(constant_matrix(np.eye(dim)), box, "I")
    return CatalogEntry(
        f"minkowski({dim})", dim, b, lebesgue(dim, box), box, g, funcs, polys, morph, {"dim": dim},
        "Lorentzian; the Laplacians are the d'Alembert operator",
    )


def _hyperbolic():
    box = Box((0.0, 0.5), (1.0, 2.0))
    b = GeometricStructure(matrix([["1/x2^2", "0"], ["0", "1/x2^2"]]), box, "hyperbolic-half-plane")
    funcs, polys = _pools(2, box, {"logy": "log(x2)"})
    lam = 1.5
    morph = {
        "translate": _translation(2, [0.3, 0.0]),
        "scale": _map([f"{lam!r}*x1", f"{lam!r}*x2"], [f"x1/{lam!r}", f"x2/{lam!r}"], "scale"),
    }
    return CatalogEntry(
        "hyperbolic-half-plane", 2, b, riemannian_volume(b), box, b, funcs, polys, morph, {},
        "Poincare half-plane metric kept away from y = 0",
    )


def _canonical_symplectic(dim: int = 2):
    if dim < 2 or dim % 2:
        raise ValueError("canonical-symplectic needs an even dim >= 2")
    n = dim // 2
    box = Box.cube(dim)
    B = np.zeros((dim, dim))
    B[:n, n:] = np.eye(n)
    B[n:, :n] = -np.eye(n)
    b = GeometricStructure(constant_matrix(B), box, f"canonical-symplectic({dim})")
    funcs, polys = _pools(dim, box)
    xs = _coords(dim)
    s = 0.5
    fwd = xs[:n] + [f"{xs[n + i]} + {s!r}*{xs[i]}" for i in range(n)]
    inv = xs[:n] + [f"{xs[n + i]} - {s!r}*{xs[i]}" for i in range(n)]
    morph = {
        "translate": _translation(dim, [0.25] + [-0.5] * (dim - 1)),
        "shear": _map(fwd, inv, "sl2-shear"),
        "rotate": _rotation(dim, 0.7, 0, n),
    }
    g = GeometricStructure(constant_matrix(np.eye(dim)), box, "I")
    return CatalogEntry(
        f"canonical-symplectic({dim})", dim, b, liouville_volume(b), box, g, funcs, polys, morph, {"dim": dim},
        "coordinates ordered (q1..qn, p1..pn)",
    )


def _exp_symplectic():
    box = Box.cube(2)
    b = GeometricStructure(matrix([["0", "exp(x1)"], ["-exp(x1)", "0"]]), box, "exp-symplectic")
    funcs, polys = _pools(2, box)
    morph = {
        "translate": _translation(2, [0.0, 0.4]),
        "fiber-shear": _map(["x1", "x2 + sin(x1)"], ["x1", "x2 - sin(x1)"], "fiber-shear"),
    }
    g = GeometricStructure(constant_matrix(np.eye(2)), box, "I")
    return CatalogEntry(
        "exp-symplectic", 2, b, liouville_volume(b), box, g, funcs, polys, morph, {},
        "non-constant symplectic form exp(x) dx ^ dy",
    )


def _shear2():
    box = Box.cube(2)
    b = GeometricStructure(constant_matrix([[1.0, 1.0], [0.0, 1.0]]), box, "shear2")
    funcs, polys = _pools(2, box)
    morph = {"translate": _translation(2, [0.25, -0.5])}
    g = GeometricStructure(constant_matrix(np.eye(2)), box, "I")
    return CatalogEntry(
        "shear2", 2, b, lebesgue(2, box), box, g, funcs, polys, morph, {},
        "generic constant structure, neither symmetric nor skew",
    )


def _mixed(eps: float = 0.5):
    box = Box.cube(2)
    B = np.eye(2) + eps * np.array([[0.0, 1.0], [-1.0, 0.0]])
    b = GeometricStructure(constant_matrix(B), box, f"mixed({eps:g})")
    funcs, polys = _pools(2, box)
    morph = {"translate": _translation(2, [0.25, -0.5]), "rotate": _rotation(2, 0.7)}
    g = GeometricStructure(constant_matrix(np.eye(2)), box, "I")
    return CatalogEntry(
        f"mixed({eps:g})", 2, b, lebesgue(2, box), box, g, funcs, polys, morph, {"eps": eps},
        "identity plus eps times the symplectic form",
    )


_BUILDERS = {
    "euclidean": (_euclidean, "dim", int),
    "minkowski": (_minkowski, "dim", int),
    "hyperbolic-half-plane": (_hyperbolic, None, None),
    "canonical-symplectic": (_canonical_symplectic, "dim", int),
    "exp-symplectic": (_exp_symplectic, None, None),
    "shear2": (_shear2, None, None),
    "mixed": (_mixed, "eps", float),
}

DEFAULTS = [
    "euclidean(2)",
    "minkowski(2)",
    "hyperbolic-half-plane",
    "canonical-symplectic(2)",
    "exp-symplectic",
    "shear2",
    "mixed(0.5)",
]

_NAME_RE = re.compile(r"^\s*([a-z0-9-]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def names() -> list:
    return list(_BUILDERS)


def parse_name(text: str):
    m = _NAME_RE.match(text)
    if not m:
        raise KeyError(f"malformed catalog name {text!r}")
    name, arg = m.group(1), m.group(2)
    if name not in _BUILDERS:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(_BUILDERS)}")
    _, pname, ptype = _BUILDERS[name]
    params = {}
    if arg:
        if pname is None:
            raise ValueError(f"catalog entry {name!r} takes no parameter")
        params[pname] = ptype(arg)
    return name, params


def get(name: str, params: dict | None = None, **kw) -> CatalogEntry:
    """Build a catalog entry by name; parameters may be inline, in ``params`` or keywords."""
    base, inline = parse_name(name)
    args = {**inline, **(params or {}), **kw}
    builder, pname, ptype = _BUILDERS[base]
    unknown = set(args) - ({pname} if pname else set())
    if unknown:
        raise ValueError(f"bad parameters for {base!r}: {sorted(unknown)}")
    if pname in args:
        args[pname] = ptype(args[pname])
    return builder(**args)


def entries() -> list:
    """The seven default entries, freshly built."""
    return [get(n) for n in DEFAULTS]
