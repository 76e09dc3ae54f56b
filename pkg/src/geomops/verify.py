"""Verification suites: one check per documented invariant of each module.

``run_suite(name, entry)`` returns a list of :class:`Check` records.  Checks
that do not apply to an entry (e.g. symplectic identities on a metric) are
returned with ``skipped=True`` and a note rather than silently dropped, so a
report always lists the full suite.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import catalog as _catalog
from . import exprlang
from .box import Box
from .calculus import (
    bracket,
    bracket_skew,
    bracket_sym,
    directional_derivative,
    grad_left,
    grad_right,
    hamilton_poisson_field,
    leibniz_field_sym,
)
from .errors import PreconditionError
from .fields import DiffeoMap, compose, constant_matrix, matrix, scalar, vector
from .flowdyn import (
    check_flow_bracket,
    constant_of_motion_residual,
    flow_jacobian,
    integrate,
    periodicity_monotonicity_check,
    transport_check,
)
from .measure import VolumeForm, closedness_residual, divergence, laplace_left, laplace_right, rescale_volume
from .morph import (
    check_bracket_naturality,
    check_div_naturality,
    check_grad_naturality,
    check_group_property,
    check_laplace_naturality,
    is_geometromorphism,
    pullback_structure,
    pullback_volume,
)
from .quad import (
    QuadRule,
    dirichlet_energy,
    el_residual,
    green_combined,
    green_left,
    green_riemannian,
    green_right,
    integrate_boundary_flux,
    symplectic_green,
)
from .structure import (
    GeometricStructure,
    adjoint_left,
    adjoint_metric,
    adjoint_right,
    check_nondegenerate,
    definiteness_probe,
    geometric_pair,
    skew_part,
    sym_part,
)

__all__ = ["Check", "SUITES", "run_suite", "run_all", "PARSER_CORPUS", "random_expression"]

TOL_ALG = 1e-9
TOL_DIFF = 1e-8
TOL_INT = 1e-6


@dataclass
class Check:
    suite: str
    check: str
    residual: float
    tol: float
    passed: bool
    skipped: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _ok(suite, name, residual, tol, note=""):
    residual = float(residual)
    return Check(suite, name, residual, tol, bool(residual < tol), False, note)


def _skip(suite, name, note):
    return Check(suite, name, 0.0, 0.0, True, True, note)


def _maxabs(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


# ------------------------------------------------------------------ exprlang

PARSER_CORPUS = [
    ("x1^2 + x2^2", 2, "(+ (^ x1 2) (^ x2 2))"),
    ("-x1^2", 1, "(neg (^ x1 2))"),
    ("x1 - x2 - x1", 2, "(- (- x1 x2) x1)"),
    ("x1 / x2 / x1", 2, "(/ (/ x1 x2) x1)"),
    ("x1^x2^2", 2, "(^ x1 (^ x2 2))"),
    ("2^-x1", 1, "(^ 2 (neg x1))"),
    ("-(x1 + x2) * 3", 2, "(* (neg (+ x1 x2)) 3)"),
    ("sin(x1)^2", 1, "(^ (sin x1) 2)"),
    ("x1 * (x2 - 1)", 2, "(* x1 (- x2 1))"),
    ("x1 + x2 * x1", 2, "(+ x1 (* x2 x1))"),
    ("(x1 + x2) * x1", 2, "(* (+ x1 x2) x1)"),
    ("-x1 - x2", 2, "(- (neg x1) x2)"),
    ("--x1", 1, "(neg (neg x1))"),
    ("(x1^2)^3", 1, "(^ (^ x1 2) 3)"),
    ("x1 - (x2 - x1)", 2, "(- x1 (- x2 x1))"),
    ("x1 * x2 / x1", 2, "(/ (* x1 x2) x1)"),
    ("x1 / (x2 * x1)", 2, "(/ x1 (* x2 x1))"),
    ("exp(-x1^2 / 2)", 1, "(exp (/ (neg (^ x1 2)) 2))"),
    ("2 * pi * x1", 1, "(* (* 2 pi) x1)"),
    ("atan(x2) - sqrt(x1 + 1)^3", 2, "(- (atan x2) (^ (sqrt (+ x1 1)) 3))"),
]


def random_expression(rng: np.random.Generator, dim: int, depth: int = 3) -> str:
    """Random well-defined expression text (bounded derivatives on [-1, 1]^dim)."""
    if depth <= 0 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return f"x{rng.integers(1, dim + 1)}"
        return f"{rng.uniform(-2, 2):.3f}"
    kind = rng.integers(0, 7)
    a = random_expression(rng, dim, depth - 1)
    if kind == 0:
        return f"({a} + {random_expression(rng, dim, depth - 1)})"
    if kind == 1:
        return f"({a} - {random_expression(rng, dim, depth - 1)})"
    if kind == 2:
        return f"({a} * {random_expression(rng, dim, depth - 1)})"
    if kind == 3:
        return f"({a} / (1.5 + {random_expression(rng, dim, depth - 1)}^2))"
    if kind == 4:
        return f"({a})^{rng.integers(2, 4)}"
    if kind == 5:
        fn = rng.choice(["sin", "cos", "atan", "tanh"])
        return f"{fn}({a})"
    fn = rng.choice(["exp", "sqrt", "log"])
    if fn == "exp":
        return f"exp(sin({a}))"
    return f"{fn}(1 + ({a})^2)"


def _fd_grad(ast, p, h):
    n = len(p)
    g = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        g[i] = (exprlang.evaluate(ast, p + e) - exprlang.evaluate(ast, p - e)) / (2 * h)
    return g


def _fd_hess(ast, p, h):
    n = len(p)
    H = np.empty((n, n))
    f = lambda q: exprlang.evaluate(ast, q)
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4 * h * h)
    return H


def suite_exprlang(entry=None, seed: int = 0):
    s = "exprlang"
    out = []
    bad = 0
    stable = 0
    for text, dim, expected in PARSER_CORPUS:
        ast = exprlang.parse(text, dim)
        bad += exprlang.sexpr(ast) != expected
        once = exprlang.format_expr(ast)
        stable += exprlang.format_expr(exprlang.parse(once, dim)) != once
    out.append(_ok(s, "parse_corpus", bad, 0.5, f"{len(PARSER_CORPUS)} precedence/associativity cases"))
    out.append(_ok(s, "format_roundtrip", stable, 0.5))
    rng = np.random.default_rng(seed)
    worst_g = worst_h = worst_v = 0.0
    for _ in range(100):
        dim = int(rng.integers(1, 4))
        ast = exprlang.parse(random_expression(rng, dim), dim)
        p = rng.uniform(-1, 1, dim)
        j = exprlang.eval_jet2(ast, p)
        g = _fd_grad(ast, p, 1e-5)
        H = _fd_hess(ast, p, 1e-4)
        worst_g = max(worst_g, _maxabs(j.gradient - g) / (1 + _maxabs(j.gradient)))
        worst_h = max(worst_h, _maxabs(j.hessian - H) / (1 + _maxabs(j.hessian)))
        worst_v = max(worst_v, abs(j.value - exprlang.evaluate(ast, p)))
    out.append(_ok(s, "jet_gradient_vs_fd", worst_g, 1e-6, "100 random expressions"))
    out.append(_ok(s, "jet_hessian_vs_fd", worst_h, 1e-6, "100 random expressions"))
    out.append(_ok(s, "value_slot_exact", worst_v, 1e-300))
    return out


# -------------------------------------------------------------------- fields

def _random_map(rng, dim):
    """Random smooth map with bounded Jacobian."""
    comps = []
    for k in range(dim):
        terms = [f"{rng.uniform(0.5, 1.5):.3f}*x{k + 1}"]
        for i in range(dim):
            terms.append(f"{rng.uniform(-0.3, 0.3):.3f}*sin(x{i + 1})")
        terms.append(f"{rng.uniform(-0.2, 0.2):.3f}*x{rng.integers(1, dim + 1)}^2")
        comps.append(" + ".join(terms))
    return vector(comps, dim)


def suite_fields(entry, seed: int = 0):
    s = "fields"
    rng = np.random.default_rng(seed)
    dim = entry.dim
    worst = 0.0
    for _ in range(50):
        phi, psi = _random_map(rng, dim), _random_map(rng, dim)
        p = entry.box.random(1, rng)[0]
        comp = compose(phi, psi)
        lhs = comp.jet(p, 1).grad
        rhs = phi.jet(psi(p), 1).grad @ psi.jet(p, 1).grad
        worst = max(worst, _maxabs(lhs - rhs))
    out = [_ok(s, "jacobian_chain_rule", worst, TOL_ALG, "50 random map pairs")]
    pts = entry.box.random(100, rng)
    asym = 0.0
    for F in entry.pool():
        H = F.jet(pts, 2).hess
        asym = max(asym, _maxabs(H - np.swapaxes(H, -1, -2)))
    out.append(_ok(s, "hessian_symmetric", asym, 1e-300, "exact symmetry"))
    return out


# ----------------------------------------------------------------- structure

def _random_matrix_field(rng, dim, shift=0.0):
    rows = []
    for i in range(dim):
        row = []
        for j in range(dim):
            c = rng.uniform(-1, 1) + (shift if i == j else 0.0)
            row.append(f"{c:.4f} + {rng.uniform(-0.3, 0.3):.4f}*sin(x{rng.integers(1, dim + 1)})")
        rows.append(row)
    return matrix(rows, dim)


def suite_structure(entry, seed: int = 0):
    s = "structure"
    b = entry.structure
    rng = np.random.default_rng(seed)
    pts = entry.box.random(50, rng)
    dim = entry.dim
    A = _random_matrix_field(rng, dim, 3.0)
    Bm = _random_matrix_field(rng, dim, 3.0)
    F, G = scalar("1 + x1^2", dim), scalar(f"cos(x{dim})", dim)
    out = []
    lin = 0.0
    for adj in (adjoint_left, adjoint_right):
        lhs = adj(b, A.scale(F) + Bm.scale(G))(pts)
        rhs = (adj(b, A).scale(F) + adj(b, Bm).scale(G))(pts)
        lin = max(lin, _maxabs(lhs - rhs))
    out.append(_ok(s, "adjoint_linearity", lin, TOL_ALG))
    inv = max(
        _maxabs(adjoint_right(b, adjoint_left(b, A))(pts) - A(pts)),
        _maxabs(adjoint_left(b, adjoint_right(b, A))(pts) - A(pts)),
    )
    out.append(_ok(s, "adjoint_involution", inv, TOL_ALG))
    prod = 0.0
    for adj in (adjoint_left, adjoint_right):
        prod = max(prod, _maxabs(adj(b, A @ Bm)(pts) - (adj(b, Bm) @ adj(b, A))(pts)))
    out.append(_ok(s, "adjoint_product", prod, TOL_ALG))
    Ainv = np.linalg.inv(A(pts))
    invr = 0.0
    for adj in (adjoint_left, adjoint_right):
        adjA = adj(b, A)(pts)
        # adjoint of the pointwise inverse, built from the inverse values at each point
        B = b.matrix(pts)
        if adj is adjoint_left:
            adj_inv = np.linalg.inv(np.swapaxes(B, -1, -2)) @ np.swapaxes(Ainv, -1, -2) @ np.swapaxes(B, -1, -2)
        else:
            adj_inv = np.linalg.inv(B) @ np.swapaxes(Ainv, -1, -2) @ B
        invr = max(invr, _maxabs(adj_inv - np.linalg.inv(adjA)))
    out.append(_ok(s, "adjoint_inverse", invr, TOL_ALG))
    if b.is_symmetric or b.is_skew:
        out.append(_ok(s, "adjoint_collapse", _maxabs(adjoint_left(b, A)(pts) - adjoint_right(b, A)(pts)), TOL_ALG))
    else:
        out.append(_skip(s, "adjoint_collapse", "structure neither symmetric nor skew"))
    if entry.metric is not None:
        g = entry.metric
        pair = geometric_pair(b, g, pts)
        Bg = pair.B_g
        star_g = adjoint_metric(g, Bg)(pts)
        Bgv = Bg(pts)
        r = max(
            pair.residual,
            _maxabs(adjoint_left(b, Bg)(pts) - star_g),
            _maxabs(adjoint_right(b, Bg)(pts) - Bgv @ star_g @ np.linalg.inv(Bgv)),
        )
        if b.is_symmetric:
            r = max(r, _maxabs(star_g - Bgv))
        if b.is_skew:
            r = max(r, _maxabs(star_g + Bgv))
        out.append(_ok(s, "pair_adjoints", r, TOL_ALG))
    else:
        out.append(_skip(s, "pair_adjoints", "entry has no reference metric"))
    Bv = b.matrix(pts)
    out.append(_ok(s, "sym_skew_decomposition", _maxabs(Bv - sym_part(b).matrix(pts) - skew_part(b).matrix(pts)), 1e-14))
    return out


# ------------------------------------------------------------------ calculus

def _e_rows(Bv, v, left):
    """Row vector of ``b(v, e_i)`` (left) or ``b(e_i, v)`` (right)."""
    if left:
        return np.einsum("mi,mij->mj", v, Bv)
    return np.einsum("mij,mj->mi", Bv, v)


def suite_calculus(entry, seed: int = 0):
    s = "calculus"
    b = entry.structure
    rng = np.random.default_rng(seed)
    pts = entry.box.random(100, rng)
    pool = entry.pool(5)
    Bv = b.matrix(pts)
    out = []
    d = 0.0
    for F in pool:
        dF = F.jet(pts, 1).grad
        d = max(d, _maxabs(_e_rows(Bv, grad_left(b, F)(pts), True) - dF))
        d = max(d, _maxabs(_e_rows(Bv, grad_right(b, F)(pts), False) - dF))
    out.append(_ok(s, "defining_relations", d, TOL_ALG, "100 points x 5 pool functions"))
    f = 0.0
    for F in pool:
        for G in pool:
            l = np.einsum("mi,mij,mj->m", grad_left(b, F)(pts), Bv, grad_left(b, G)(pts))
            r = np.einsum("mi,mij,mj->m", grad_right(b, F)(pts), Bv, grad_right(b, G)(pts))
            f = max(f, _maxabs(l - r))
    out.append(_ok(s, "left_right_bracket_agree", f, TOL_ALG))
    if b.is_symmetric:
        out.append(_ok(s, "gradient_collapse", max(_maxabs(grad_left(b, F)(pts) - grad_right(b, F)(pts)) for F in pool), TOL_ALG, "symmetric"))
    elif b.is_skew:
        out.append(_ok(s, "gradient_collapse", max(_maxabs(grad_left(b, F)(pts) + grad_right(b, F)(pts)) for F in pool), TOL_ALG, "skew"))
    else:
        out.append(_skip(s, "gradient_collapse", "structure neither symmetric nor skew"))
    F, G, H = pool[0], pool[-2], pool[-1]
    lr = max(
        _maxabs(bracket(b, F * G, H)(pts) - (F * bracket(b, G, H) + G * bracket(b, F, H))(pts)),
        _maxabs(bracket(b, H, F * G)(pts) - (F * bracket(b, H, G) + G * bracket(b, H, F))(pts)),
    )
    out.append(_ok(s, "leibniz_rule", lr, TOL_ALG))
    if entry.metric is not None:
        g = entry.metric
        pair = geometric_pair(b, g, pts)
        Gv = g.matrix(pts)
        Bg = pair.B_g(pts)
        star = adjoint_metric(g, pair.B_g)(pts)
        r = 0.0
        for F in pool:
            ng = np.linalg.solve(Gv, F.jet(pts, 1).grad[..., None])[..., 0]
            r = max(r, _maxabs(grad_left(b, F)(pts) - np.einsum("mij,mj->mi", star, ng)))
            r = max(r, _maxabs(grad_right(b, F)(pts) - np.einsum("mij,mj->mi", Bg, ng)))
        out.append(_ok(s, "gradients_via_pair", r, TOL_ALG))
    else:
        out.append(_skip(s, "gradients_via_pair", "entry has no reference metric"))
    dd = 0.0
    for F in pool:
        for G in pool:
            dd = max(dd, _maxabs(directional_derivative(G, grad_left(b, F))(pts) - bracket(b, G, F)(pts)))
            dd = max(dd, _maxabs(directional_derivative(G, grad_right(b, F))(pts) - bracket(b, F, G)(pts)))
    out.append(_ok(s, "directional_derivative_brackets", dd, TOL_ALG))
    ls = 0.0
    for F in pool:
        for G in pool:
            full = bracket(b, F, G)(pts)
            ls = max(ls, _maxabs(bracket_sym(b, F, G)(pts) + bracket_skew(b, F, G)(pts) - full))
            ls = max(ls, _maxabs(directional_derivative(G, leibniz_field_sym(b, F))(pts) - bracket_sym(b, G, F)(pts)))
            ls = max(ls, _maxabs(directional_derivative(G, hamilton_poisson_field(b, F))(pts) - bracket_skew(b, G, F)(pts)))
    out.append(_ok(s, "sym_skew_leibniz_fields", ls, TOL_ALG))
    if b.is_constant:
        polys = entry.polynomials + [entry.functions["sumsq"]]
        jac = 0.0
        for i in range(len(polys)):
            for j in range(len(polys)):
                for k in range(len(polys)):
                    P, Q, R = polys[i], polys[j], polys[k]
                    cyc = (
                        bracket_skew(b, bracket_skew(b, P, Q), R)
                        + bracket_skew(b, bracket_skew(b, Q, R), P)
                        + bracket_skew(b, bracket_skew(b, R, P), Q)
                    )
                    jac = max(jac, _maxabs(cyc(pts)))
        out.append(_ok(s, "skew_bracket_jacobi", jac, TOL_DIFF, "constant structure, polynomial triples"))
    else:
        out.append(_skip(s, "skew_bracket_jacobi", "structure is not constant"))
    return out


# ------------------------------------------------------------------- measure

def _defect(lap, b, mu, F, G, pts):
    return lap(b, mu, F * G)(pts) - (F * lap(b, mu, G))(pts) - (G * lap(b, mu, F))(pts)


def suite_measure(entry, seed: int = 0):
    s = "measure"
    b, mu = entry.structure, entry.volume
    rng = np.random.default_rng(seed)
    pts = entry.box.random(50, rng)
    pool = entry.pool(5)
    F, G = pool[-2], pool[-1]
    out = []
    lin = 0.0
    for lap in (laplace_left, laplace_right):
        lin = max(lin, _maxabs(lap(b, mu, 2.0 * F - 3.0 * G)(pts) - 2.0 * lap(b, mu, F)(pts) + 3.0 * lap(b, mu, G)(pts)))
    out.append(_ok(s, "laplace_linearity", lin, TOL_DIFF))
    Bv = b.matrix(pts)
    pr = 0.0
    for lap, grad in ((laplace_left, grad_left), (laplace_right, grad_right)):
        gF, gG = grad(b, F)(pts), grad(b, G)(pts)
        cross = np.einsum("mi,mij,mj->m", gF, Bv, gG) + np.einsum("mi,mij,mj->m", gG, Bv, gF)
        pr = max(pr, _maxabs(_defect(lap, b, mu, F, G, pts) - cross))
    out.append(_ok(s, "laplace_product_rule", pr, TOL_DIFF))
    out.append(_ok(s, "product_defects_agree",
                   _maxabs(_defect(laplace_left, b, mu, F, G, pts) - _defect(laplace_right, b, mu, F, G, pts)), TOL_DIFF))
    sym = bracket_sym(b, F, G)(pts)
    be1 = max(_maxabs(sym - 0.5 * _defect(lap, b, mu, F, G, pts)) for lap in (laplace_left, laplace_right))
    out.append(_ok(s, "sym_bracket_is_half_defect", be1, TOL_DIFF))
    chains = {
        "square": (F.apply("square"), 2.0 * F, scalar(2.0, entry.dim)),
        "exp": (F.apply("exp"), F.apply("exp"), F.apply("exp")),
        "sin": (F.apply("sin"), F.apply("cos"), -F.apply("sin")),
    }
    FF = bracket(b, F, F)(pts)
    be2 = 0.0
    for phi, d1, d2 in chains.values():
        for lap in (laplace_left, laplace_right):
            be2 = max(be2, _maxabs(lap(b, mu, phi)(pts) - d1(pts) * lap(b, mu, F)(pts) - d2(pts) * FF))
    out.append(_ok(s, "laplace_chain_rule", be2, TOL_DIFF, "phi in square, exp, sin"))
    if b.is_symmetric:
        out.append(_ok(s, "laplace_collapse", max(_maxabs(laplace_left(b, mu, H)(pts) - laplace_right(b, mu, H)(pts)) for H in pool), TOL_DIFF, "symmetric"))
    elif b.is_skew:
        out.append(_ok(s, "laplace_collapse", max(_maxabs(laplace_left(b, mu, H)(pts) + laplace_right(b, mu, H)(pts)) for H in pool), TOL_DIFF, "skew"))
    else:
        out.append(_skip(s, "laplace_collapse", "structure neither symmetric nor skew"))
    f = scalar(f"exp(0.3*x1 - 0.2*x{entry.dim})", entry.dim)
    omega = rescale_volume(mu, f, entry.box.probes())
    cv = 0.0
    for H in pool:
        cv = max(cv, _maxabs(laplace_left(b, omega, H)(pts) - laplace_left(b, mu, H)(pts) - (bracket(b, f, H) / f)(pts)))
        cv = max(cv, _maxabs(laplace_right(b, omega, H)(pts) - laplace_right(b, mu, H)(pts) - (bracket(b, H, f) / f)(pts)))
    out.append(_ok(s, "change_of_volume", cv, TOL_DIFF))
    vi = 0.0
    for lap in (laplace_left, laplace_right):
        vi = max(vi, _maxabs(_defect(lap, b, mu, F, G, pts) - _defect(lap, b, omega, F, G, pts)))
    out.append(_ok(s, "defect_volume_independent", vi, TOL_DIFF))
    if b.is_skew and mu.kind == "liouville" and closedness_residual(b) < 1e-9:
        polys = entry.polynomials + [entry.functions["sumsq"]]
        van = max(_maxabs(lap(b, mu, H)(pts)) for H in polys for lap in (laplace_left, laplace_right))
        out.append(_ok(s, "liouville_laplacians_vanish", van, TOL_DIFF))
        fw = scalar("exp(x1)", entry.dim)
        om = rescale_volume(mu, fw, entry.box.probes())
        Xf = grad_left(b, fw)
        tail = max(_maxabs(laplace_right(b, om, H)(pts) - (directional_derivative(H, Xf) / fw)(pts)) for H in polys)
        out.append(_ok(s, "symplectic_rescaled_laplacian", tail, TOL_DIFF, "omega = exp(x1) Lambda"))
    else:
        out.append(_skip(s, "liouville_laplacians_vanish", "not a symplectic entry with Liouville volume"))
        out.append(_skip(s, "symplectic_rescaled_laplacian", "not a symplectic entry with Liouville volume"))
    return out


# --------------------------------------------------------------------- morph

def suite_morph(entry, seed: int = 0):
    s = "morph"
    b, mu = entry.structure, entry.volume
    pts = entry.box.probes(50)
    pool = entry.pool(5)
    out = []
    maps = list(entry.morphisms.values())
    geo = 0.0
    for m in maps:
        geo = max(geo, is_geometromorphism(m, b, b, pts).max_residual)
    out.append(_ok(s, "catalog_maps_are_geometromorphisms", geo, TOL_ALG, ", ".join(m.label for m in maps)))
    gn = bn = dn = ln = 0.0
    notes = []
    X = vector([f"x{entry.dim}", "1"] + ["0"] * (entry.dim - 2), entry.dim) if entry.dim >= 2 else vector(["x1"], 1)
    for m in maps:
        for F in pool:
            gn = max(gn, check_grad_naturality(m, b, b, F, pts).max_residual)
        bn = max(bn, check_bracket_naturality(m, b, b, pool[0], pool[-1], pts).max_residual)
        bn = max(bn, check_bracket_naturality(m, b, b, pool[-2], pool[-1], pts).max_residual)
        try:
            dn = max(dn, check_div_naturality(m, mu, mu, X, pts).max_residual)
            for F in pool:
                ln = max(ln, check_laplace_naturality(m, b, mu, b, mu, F, pts).max_residual)
        except PreconditionError:
            notes.append(f"{m.label} not volume preserving")
    out.append(_ok(s, "gradient_naturality", gn, TOL_DIFF, "includes equivariance (same source and target)"))
    out.append(_ok(s, "bracket_naturality", bn, TOL_DIFF, "bracket, sym and skew parts"))
    out.append(_ok(s, "divergence_naturality", dn, TOL_DIFF, "; ".join(notes)))
    out.append(_ok(s, "laplace_naturality", ln, TOL_DIFF, "; ".join(notes)))
    fn = 0.0
    for m1 in maps:
        for m2 in maps:
            comp = m1.after(m2)
            seq = pullback_structure(m2, pullback_structure(m1, b))
            fn = max(fn, _maxabs(pullback_structure(comp, b).matrix(pts) - seq.matrix(pts)))
    out.append(_ok(s, "pullback_functorial", fn, 1e-10))
    out.append(_ok(s, "group_property", check_group_property(maps, b, pts).max_residual, TOL_ALG))
    return out


# ------------------------------------------------------------------- flowdyn

def _inner_box(box: Box, frac: float = 0.25) -> Box:
    lo, hi = np.array(box.lower), np.array(box.upper)
    w = hi - lo
    return Box(tuple(lo + frac * w), tuple(hi - frac * w))


def suite_flowdyn(entry, seed: int = 0):
    s = "flowdyn"
    b, mu = entry.structure, entry.volume
    F = entry.functions["sumsq"]
    X = grad_left(b, F)
    inner = _inner_box(entry.box)
    seeds = inner.probes(8)
    out = []
    # flow time scaled to the field's Lipschitz size so orbits stay in the chart
    lip = float(np.max(np.linalg.norm(X.jet(entry.box.probes(), 1).grad, ord=2, axis=(-2, -1))))
    T = 0.1 / max(1.0, lip / 2.0)
    ref = integrate(X, seeds, T, 1024).end
    e1 = _maxabs(integrate(X, seeds, T, 4).end - ref)
    e2 = _maxabs(integrate(X, seeds, T, 8).end - ref)
    ratio = e1 / e2 if e2 > 0 else float("inf")
    out.append(Check(s, "rk4_order", abs(ratio - 16.0), 4.0, bool(12.0 <= ratio <= 20.0), False, f"error ratio {ratio:.3f}"))
    J = flow_jacobian(X, seeds, T, 400)
    logdet = np.log(np.abs(np.linalg.det(J.matrices)))
    h = J.trajectory.h
    dl = (logdet[2:] - logdet[:-2]) / (2 * h)
    n = entry.dim
    lebesgue_div = divergence(VolumeForm(scalar(1.0, n), 1, "lebesgue", entry.box), X)
    mid = J.trajectory.states[1:-1].reshape(-1, n)
    out.append(_ok(s, "liouville_formula", _maxabs(dl.reshape(-1) - lebesgue_div(mid)), 1e-5))
    fb = max(
        check_flow_bracket(b, F, entry.functions["x1"], seeds[0], 2 * T, 1000, side).residual for side in ("L", "R")
    )
    out.append(_ok(s, "flow_bracket", fb, TOL_INT, "f = x1, F = sum of squares"))
    pool = entry.pool()
    pair = None
    probes = entry.box.probes()
    if b.is_skew:
        # energy conservation is the informative case for a skew structure
        pair = (F, F)
    for P in ([] if pair else pool):
        for Q in pool:
            if _maxabs(bracket(b, P, Q)(probes)) < 1e-13:
                pair = (P, Q)
                break
        if pair:
            break
    if pair:
        rep = constant_of_motion_residual(b, pair[0], pair[1], seeds, 5 * T, 500)
        out.append(_ok(s, "constants_of_motion", rep.residual, TOL_DIFF, f"{pair[0].label}, {pair[1].label}"))
    else:
        out.append(_skip(s, "constants_of_motion", "no pool pair with vanishing bracket"))
    tr = transport_check(b, mu, F, inner, T, 400, order=6)
    out.append(_ok(s, "transport_theorem", tr.residual, TOL_INT))
    lap = laplace_left(b, mu, F)(inner.probes())
    vols = np.array(tr.values["volumes"])
    dv = np.diff(vols)
    if np.all(np.abs(lap) < 1e-12):
        mono = _maxabs(vols / vols[0] - 1.0)
        out.append(_ok(s, "volume_monotonicity", mono, TOL_INT, "harmonic: volume constant"))
    elif np.all(lap >= 0):
        out.append(_ok(s, "volume_monotonicity", max(0.0, -float(dv.min())), 1e-12, "subharmonic: non-decreasing"))
    elif np.all(lap <= 0):
        out.append(_ok(s, "volume_monotonicity", max(0.0, float(dv.max())), 1e-12, "superharmonic: non-increasing"))
    else:
        out.append(_skip(s, "volume_monotonicity", "Laplacian changes sign on the probes"))
    cls = definiteness_probe(b).classification
    if cls in ("positive", "negative"):
        rep = periodicity_monotonicity_check(b, F, _inner_box(entry.box, 0.1).probes(20), T, 200)
        out.append(_ok(s, "no_periodic_orbits", rep.values["non_increasing_steps"], 0.5, f"{cls} bracket"))
    else:
        try:
            periodicity_monotonicity_check(b, F, seeds, T, 10)
            out.append(Check(s, "no_periodic_orbits", 1.0, 0.5, False, False, "check should refuse an indefinite bracket"))
        except PreconditionError:
            out.append(_ok(s, "no_periodic_orbits", 0.0, 0.5, f"refused: {cls} bracket"))
    return out


# ---------------------------------------------------------------------- quad

def suite_quad(entry, seed: int = 0):
    s = "quad"
    b, mu, box = entry.structure, entry.volume, entry.box
    rng = np.random.default_rng(seed)
    n = entry.dim
    out = []
    worst = 0.0
    rule = QuadRule.on_box(box, 12)
    for _ in range(50):
        a = rng.uniform(-0.5, 0.5, n)
        fac = scalar("exp(" + " + ".join(f"{c:.4f}*x{i + 1}" for i, c in enumerate(a)) + ")", n)
        m = VolumeForm(mu.density * fac, 1, "density", box)
        comps = []
        for _k in range(n):
            c = rng.uniform(-1, 1, 3)
            i, j = rng.integers(1, n + 1, 2)
            comps.append(f"{c[0]:.4f} + {c[1]:.4f}*x{i}*x{j} + {c[2]:.4f}*sin(x{j})")
        X = vector(comps, n)
        bulk = rule.integrate_values(divergence(m, X)(rule.nodes) * m.density(rule.nodes))
        worst = max(worst, abs(bulk - integrate_boundary_flux(m, X, None, box, 12)))
    out.append(_ok(s, "divergence_theorem", worst, TOL_DIFF, "50 random (volume, field) pairs, order 12"))
    F, G = entry.functions["poly1"], entry.functions["smooth"]
    g = max(r.residual for r in (green_left(b, mu, F, G, box, 12), green_right(b, mu, F, G, box, 12), green_combined(b, mu, F, G, box, 12)))
    out.append(_ok(s, "green_identities", g, TOL_DIFF, "order 12"))
    res = [green_left(b, mu, G, G.apply("exp"), box, o).residual for o in (4, 8, 16)]
    floor = 1e-12
    mono = all(r2 <= r1 or r2 < floor for r1, r2 in zip(res, res[1:]))
    out.append(Check(s, "green_convergence", res[-1], floor, bool(mono), False, "orders 4, 8, 16: " + ", ".join(f"{r:.2e}" for r in res)))
    c = box.center
    r = 0.3 * float(np.min(np.subtract(box.upper, box.lower)))
    shift = np.zeros(n)
    shift[0] = 0.25 * r
    bF, bG = _catalog.bump(c - shift, r, n), _catalog.bump(c + shift, r, n)
    gl = green_left(b, mu, bF, bG, box, 16, panels=32)
    gc = green_combined(b, mu, bF, bG, box, 16, panels=32)
    out.append(_ok(s, "compact_support_identity", abs(gl.lhs + gl.bulk), TOL_DIFF, "interior bumps, 32 panels of order 16"))
    out.append(_ok(s, "laplace_adjointness", abs(gc.extra["int_F_lapL_G"] - gc.extra["int_G_lapR_F"]), TOL_DIFF))
    if entry.metric is not None and entry.metric.is_symmetric:
        rg = green_riemannian(b, entry.metric, F, G, box, 12)
        out.append(_ok(s, "riemannian_boundary_forms", rg.extra["forms_gap"], 1e-10))
        out.append(_ok(s, "riemannian_green", rg.residual, TOL_DIFF))
    else:
        out.append(_skip(s, "riemannian_boundary_forms", "entry has no reference metric"))
        out.append(_skip(s, "riemannian_green", "entry has no reference metric"))
    if b.is_skew and closedness_residual(b) < 1e-9:
        sg = symplectic_green(b, scalar("exp(0.3*x1)", n), F, G, box, 12)
        out.append(_ok(s, "symplectic_green", sg.residual, TOL_DIFF))
        sg0 = symplectic_green(b, 1.0, bF, G, box, 16, panels=32)
        out.append(_ok(s, "liouville_bracket_integral_vanishes", abs(sg0.lhs), TOL_DIFF))
    else:
        out.append(_skip(s, "symplectic_green", "not a symplectic entry"))
        out.append(_skip(s, "liouville_bracket_integral_vanishes", "not a symplectic entry"))
    if b.is_skew:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            e = dirichlet_energy(b, mu, F, box, 8)
        out.append(_ok(s, "skew_energy_vanishes", abs(e), TOL_ALG))
    else:
        el = el_residual(b, mu, entry.functions["sumsq"], _catalog.bump(c, r, n), box, 16, panels=16)
        out.append(_ok(s, "euler_lagrange", el.residual, TOL_INT, "bump variation, 16 panels of order 16"))
    return out


# ------------------------------------------------------------------- catalog

def suite_catalog(entry, seed: int = 0):
    s = "catalog"
    rep = check_nondegenerate(entry.structure)
    out = [Check(s, "nondegenerate", rep.min_abs_det, 1e-12, rep.passed, False, f"min |det| over {rep.probes} probes")]
    probes = entry.box.probes()
    out.append(Check(s, "volume_positive", float(np.min(entry.volume.density(probes))), 0.0,
                     bool(np.all(entry.volume.density(probes) > 0)), False, "min density"))
    inv = max(m.inverse_residual(probes) for m in entry.morphisms.values())
    out.append(_ok(s, "declared_inverses", inv, 1e-10))
    out.append(Check(s, "pool_size", float(len(entry.functions)), 5.0, len(entry.functions) >= 5, False, "at least 5 pool functions"))
    return out


SUITES = {
    "exprlang": suite_exprlang,
    "fields": suite_fields,
    "structure": suite_structure,
    "calculus": suite_calculus,
    "measure": suite_measure,
    "morph": suite_morph,
    "flowdyn": suite_flowdyn,
    "quad": suite_quad,
    "catalog": suite_catalog,
}


def run_suite(name: str, entry, seed: int = 0) -> list:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: all, {', '.join(SUITES)}")
    return SUITES[name](entry, seed)


def run_all(entry, seed: int = 0, suites=None) -> list:
    out = []
    for name in suites or SUITES:
        out.extend(run_suite(name, entry, seed))
    return out
