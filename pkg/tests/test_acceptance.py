"""End-to-end acceptance criteria, each at its stated tolerance.

Every test records one line via ``record``; the terminal summary (see
conftest.py) prints the collected PASS/FAIL lines after the run.
"""

import numpy as np
import pytest

from conftest import fd_grad, fd_hess, record
from geomops import catalog, exprlang
from geomops.box import Box
from geomops.calculus import directional_derivative, grad_left, grad_right
from geomops.catalog import bump
from geomops.errors import PreconditionError
from geomops.fields import scalar
from geomops.flowdyn import check_flow_bracket, periodicity_monotonicity_check, transport_check
from geomops.measure import laplace_left, laplace_right, lebesgue, rescale_volume
from geomops.morph import (
    check_bracket_naturality,
    check_div_naturality,
    check_grad_naturality,
    check_laplace_naturality,
)
from geomops.quad import el_residual, green_left, green_riemannian
from geomops.structure import adjoint_left, adjoint_right, structure
from geomops.verify import PARSER_CORPUS, random_expression

ENTRIES = [catalog.get(n) for n in catalog.DEFAULTS]
UNIT = Box.cube(2)


def check(number, title, *parts):
    """``parts`` are ``(label, value, tol)``; every value must be below its tolerance."""
    ok = all(bool(v < t) for _, v, t in parts)
    detail = "; ".join(f"{lab} {v:.3e} < {t:.0e}" for lab, v, t in parts)
    record(number, title, detail, ok)
    assert ok, f"criterion {number}: {title}: {detail}"


def _sample(entry, seed):
    return entry.box.random(100, np.random.default_rng(seed))


def test_01_defining_relations():
    worst = 0.0
    for k, e in enumerate(ENTRIES):
        pts = _sample(e, k)
        B = e.structure.matrix(pts)
        for F in e.pool(5):
            dF = F.jet(pts, 1).grad
            gL, gR = grad_left(e.structure, F)(pts), grad_right(e.structure, F)(pts)
            # b(gradL F, e_i) = (B^T gL)_i and b(e_i, gradR F) = (B gR)_i
            worst = max(worst, np.max(np.abs(np.einsum("pji,pj->pi", B, gL) - dF)))
            worst = max(worst, np.max(np.abs(np.einsum("pij,pj->pi", B, gR) - dF)))
    check(1, "defining relations of left/right gradients", ("max residual", worst, 1e-9))


def test_02_left_right_bracket_agree():
    worst = 0.0
    for k, e in enumerate(ENTRIES):
        pts = _sample(e, k)
        B = e.structure.matrix(pts)
        pool = e.pool(5)
        for F in pool:
            for G in pool:
                lhs = np.einsum("pi,pij,pj->p", grad_left(e.structure, F)(pts), B, grad_left(e.structure, G)(pts))
                rhs = np.einsum("pi,pij,pj->p", grad_right(e.structure, F)(pts), B, grad_right(e.structure, G)(pts))
                worst = max(worst, np.max(np.abs(lhs - rhs)))
    check(2, "b(gradL F, gradL G) = b(gradR F, gradR G)", ("max residual", worst, 1e-9))


def test_03_adjoints():
    worst = 0.0
    rng = np.random.default_rng(3)
    for k, e in enumerate(ENTRIES):
        pts = _sample(e, k)
        B = e.structure.matrix(pts)
        n = e.dim
        A, C = rng.standard_normal((n, n)), rng.standard_normal((n, n))
        X, Y = rng.standard_normal((len(pts), n)), rng.standard_normal((len(pts), n))
        L, R = adjoint_left(e.structure, A)(pts), adjoint_right(e.structure, A)(pts)
        bxy = lambda U, V: np.einsum("pi,pij,pj->p", U, B, V)
        worst = max(worst, np.max(np.abs(bxy(np.einsum("pij,pj->pi", L, X), Y) - bxy(X, Y @ A.T))))
        worst = max(worst, np.max(np.abs(bxy(X @ A.T, Y) - bxy(X, np.einsum("pij,pj->pi", R, Y)))))
        # linearity, involution, products, inverses
        s = 1.7
        lin = adjoint_left(e.structure, s * A + C)(pts) - s * L - adjoint_left(e.structure, C)(pts)
        inv = adjoint_right(e.structure, adjoint_left(e.structure, A))(pts) - A
        prod = adjoint_left(e.structure, A @ C)(pts) - adjoint_left(e.structure, C)(pts) @ L
        Ai = np.linalg.inv(A)
        invs = adjoint_left(e.structure, Ai)(pts) - np.linalg.inv(L)
        for part in (lin, inv, prod, invs):
            worst = max(worst, np.max(np.abs(part)) / (1 + np.max(np.abs(L))))
    b = structure([[1, 1], [0, 1]])
    A = [[0.0, 1.0], [0.0, 0.0]]
    p = np.array([0.3, 0.7])
    L = adjoint_left(b, A)
    exact = (
        np.array_equal(L(p), [[0, 0], [1, 0]])
        and np.array_equal(adjoint_right(b, A)(p), [[-1, -1], [1, 1]])
        and np.array_equal(adjoint_right(b, L)(p), A)
    )
    check(3, "adjoint identities and shear worked example", ("max residual", worst, 1e-9),
          ("worked example mismatch", 0.0 if exact else 1.0, 0.5))


def test_04_green_on_shear():
    b = catalog.get("shear2").structure
    rep = green_left(b, lebesgue(2, UNIT), "x1", "x1^2 + x2^2", UNIT, 8)
    gap = max(abs(rep.lhs - 2), abs(rep.bulk - 1), abs(rep.boundary - 3))
    check(4, "Green identity on shear2 (lhs 2, bulk 1, boundary 3)", ("part error", gap, 1e-10),
          ("residual", rep.residual, 1e-12))


def test_05_symplectic_laplacians_vanish():
    worst = 0.0
    for name in ("canonical-symplectic(4)", "exp-symplectic"):
        e = catalog.get(name)
        pts = _sample(e, 5)
        f = scalar("exp(x1)", e.dim)
        omega = rescale_volume(e.volume, f)
        Xf = grad_left(e.structure, f)
        for H in e.polynomials:
            worst = max(worst, np.max(np.abs(laplace_left(e.structure, e.volume, H)(pts))))
            worst = max(worst, np.max(np.abs(laplace_right(e.structure, e.volume, H)(pts))))
            gap = laplace_right(e.structure, omega, H)(pts) - (directional_derivative(H, Xf) / f)(pts)
            worst = max(worst, np.max(np.abs(gap)))
    check(5, "symplectic Laplacians vanish; rescaled volume formula", ("max residual", worst, 1e-8))


def test_06_transport_theorem():
    e = catalog.get("shear2")
    rep = transport_check(e.structure, lebesgue(2, UNIT), "x1^2 + x2^2", UNIT, 0.1, 1000)
    vol_gap = abs(rep.values["volume"] - 1.491825)
    check(6, "transport: volume 1.491825 and d/dt volume = int Lap F", ("volume error", vol_gap, 1e-4),
          ("relative rate residual", rep.residual, 1e-3))


def test_07_flow_bracket():
    b = catalog.get("shear2").structure
    worst = max(
        check_flow_bracket(b, "x1^2 + x2^2", "x1", [0.3, 0.4], 0.5, 1000, chirality=c).residual for c in ("L", "R")
    )
    check(7, "flow-bracket theorem, left and right flows", ("max residual", worst, 1e-6))


def test_08_naturality():
    worst = 0.0
    for name, morph in (("canonical-symplectic", "shear"), ("hyperbolic-half-plane", "scale")):
        e = catalog.get(name)
        phi = e.morphisms[morph]
        pts = e.box.random(50, np.random.default_rng(8))
        b, mu = e.structure, e.volume
        F, G = e.functions["smooth"], e.functions["poly2"]
        reps = [
            check_grad_naturality(phi, b, b, F, pts),
            check_bracket_naturality(phi, b, b, F, G, pts),
            check_div_naturality(phi, mu, mu, grad_left(b, G), pts),
            check_laplace_naturality(phi, b, mu, b, mu, F, pts),
        ]
        worst = max(worst, *(r.max_residual for r in reps))
    check(8, "naturality under SL(2) shear and hyperbolic scaling", ("max residual", worst, 1e-8))


def test_09_euler_lagrange():
    dF = bump([0.5, 0.5], 0.3, 2)
    shear = catalog.get("shear2").structure
    rep = el_residual(shear, lebesgue(2, UNIT), "x1^2 + x2^2", dF, UNIT, order=16, lam=1e-4)
    harm = el_residual(structure(np.eye(2), box=UNIT), lebesgue(2, UNIT), "x1^2 - x2^2", dF, UNIT, order=16, lam=1e-4)
    check(9, "Euler-Lagrange first variation", ("shear2 numeric vs analytic", rep.residual, 1e-6),
          ("harmonic numeric dE", abs(harm.numeric), 1e-8))


def test_10_hyperbolic_laplacian_and_riemannian_green():
    e = catalog.get("hyperbolic-half-plane")
    pts = e.box.random(50, np.random.default_rng(10))
    lap = np.max(np.abs(laplace_left(e.structure, e.volume, "log(x2)")(pts) + 1.0))
    box = Box((0.0, 1.0), (1.0, 2.0))
    g = structure(e.structure.matrix, box=box)
    rep = green_riemannian(g, g, "x1*x2", "log(x2) + x1^2", box, 12)
    check(10, "hyperbolic Laplacian of log y; Riemannian boundary forms", ("Laplacian error", lap, 1e-9),
          ("boundary forms gap", rep.extra["forms_gap"], 1e-10))


def test_11_periodic_orbit_exclusion():
    rng = np.random.default_rng(11)
    seeds = rng.uniform(0.1, 1.0, (20, 2))
    bad = 0
    for name, T in (("euclidean", 0.5), ("shear2", 0.1)):
        rep = periodicity_monotonicity_check(catalog.get(name).structure, "x1^2 + x2^2", seeds, T, 200)
        bad += rep.values["non_increasing_steps"] + int(rep.residual)
    refused = False
    try:
        periodicity_monotonicity_check(catalog.get("canonical-symplectic").structure, "x1^2 + x2^2", seeds, 0.1, 10)
    except PreconditionError:
        refused = True
    check(11, "strict increase along gradient orbits; symplectic refused", ("non-increasing steps", bad, 0.5),
          ("symplectic not refused", 0.0 if refused else 1.0, 0.5))


def test_12_parser_and_jets():
    bad = sum(exprlang.sexpr(exprlang.parse(t, d)) != s for t, d, s in PARSER_CORPUS)
    assert len(PARSER_CORPUS) == 20
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(100):
        dim = int(rng.integers(1, 4))
        ast = exprlang.parse(random_expression(rng, dim), dim)
        f = lambda q, ast=ast: float(exprlang.evaluate(ast, q))
        p = rng.uniform(-1, 1, dim)
        j = exprlang.eval_jet2(ast, p)
        worst = max(worst, np.max(np.abs(j.gradient - fd_grad(f, p))) / (1 + np.max(np.abs(j.gradient))))
        worst = max(worst, np.max(np.abs(j.hessian - fd_hess(f, p))) / (1 + np.max(np.abs(j.hessian))))
    check(12, "parser corpus exact; jets match finite differences", ("corpus mismatches", bad, 0.5),
          ("jet vs finite differences", worst, 1e-6))
