import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geomops import catalog
from geomops.box import Box
from geomops.calculus import grad_left, grad_right
from geomops.catalog import bump
from geomops.fields import scalar, vector
from geomops.measure import VolumeForm, density_volume, divergence, lebesgue
from geomops.quad import (
    QuadRule,
    dirichlet_energy,
    el_residual,
    gauss_legendre,
    green_combined,
    green_left,
    green_riemannian,
    green_right,
    integrate_boundary_flux,
    integrate_box,
    symplectic_green,
)
from geomops.structure import structure

UNIT = Box.cube(2)
MU = lebesgue(2, UNIT)
SHEAR = structure([[1, 1], [0, 1]], box=UNIT)
EUCLID = structure(np.eye(2), box=UNIT)


@pytest.mark.parametrize("order, panels", [(1, 1), (5, 1), (8, 3), (16, 16)])
def test_gauss_legendre_weights(order, panels):
    x, w = gauss_legendre(order, 0.0, 2.0, panels)
    assert len(x) == order * panels
    assert np.all(w > 0)
    assert w.sum() == pytest.approx(2.0, rel=1e-14)
    assert np.all((x > 0) & (x < 2))
    # exact for polynomials of degree 2*order - 1
    assert np.dot(w, x ** (2 * order - 1)) == pytest.approx(2.0 ** (2 * order) / (2 * order), rel=1e-12)


def test_integrate_box_examples():
    assert integrate_box(1.0, UNIT, 4) == pytest.approx(1.0, abs=1e-15)
    assert integrate_box("x1", UNIT, 4) == pytest.approx(0.5, abs=1e-15)
    assert integrate_box("x1^2 + x2^2", UNIT, 4) == pytest.approx(2 / 3, abs=1e-15)


def test_boundary_flux_examples():
    assert integrate_boundary_flux(MU, vector(["1", "0"], 2), None, UNIT, 4) == pytest.approx(0.0, abs=1e-15)
    assert integrate_boundary_flux(MU, vector(["x1", "x2"], 2), None, UNIT, 4) == pytest.approx(2.0, abs=1e-14)
    X = grad_left(SHEAR, "x1^2 + x2^2")
    total = integrate_boundary_flux(MU, X, scalar("x1", 2), UNIT, 8)
    assert total == pytest.approx(3.0, abs=1e-13)
    again, faces = integrate_boundary_flux(MU, X, scalar("x1", 2), UNIT, 8, per_face=True)
    assert again == total
    by_face = {(f["axis"] - 1, 1 if f["side"] == "upper" else -1): f["value"] for f in faces}
    assert by_face[(0, 1)] == pytest.approx(2.0, abs=1e-13)
    assert by_face[(1, 1)] == pytest.approx(1 / 3, abs=1e-13)
    assert by_face[(1, -1)] == pytest.approx(2 / 3, abs=1e-13)
    assert by_face[(0, -1)] == pytest.approx(0.0, abs=1e-13)


def test_green_examples():
    rep = green_left(SHEAR, MU, "x1", "x1^2 + x2^2", UNIT, 8)
    assert (rep.lhs, rep.bulk, rep.boundary) == pytest.approx((2.0, 1.0, 3.0), abs=1e-10)
    assert rep.residual < 1e-12
    rep = green_right(SHEAR, MU, "x1", "x1^2 + x2^2", UNIT, 8)
    assert (rep.lhs, rep.bulk, rep.boundary) == pytest.approx((2.0, 0.0, 2.0), abs=1e-10)
    assert rep.residual < 1e-12
    rep = green_combined(SHEAR, MU, "x1", "x1^2 + x2^2", UNIT, 8)
    # LapR x1 = 0 here, so only the left term survives
    assert rep.lhs == pytest.approx(2.0, abs=1e-12) and rep.residual < 1e-10


def test_green_specialisations():
    G = "sin(x1)*x2^2"
    one = green_left(SHEAR, MU, 1.0, G, UNIT, 10)
    assert one.bulk == pytest.approx(0.0, abs=1e-14) and one.residual < 1e-12
    const = green_left(SHEAR, MU, "x1*x2", 3.0, UNIT, 8)
    assert const.lhs == const.bulk == const.boundary == 0.0
    b = structure([[2, 1], [1, 3]], box=UNIT)
    l, r = green_left(b, MU, "x1", G, UNIT, 10), green_right(b, MU, "x1", G, UNIT, 10)
    assert (l.lhs, l.bulk, l.boundary) == pytest.approx((r.lhs, r.bulk, r.boundary), abs=1e-14)
    sym = catalog.get("canonical-symplectic")
    rep = green_right(sym.structure, sym.volume, 1.0, sym.functions["smooth"], sym.box, 10)
    assert abs(rep.lhs) < 1e-12 and rep.residual < 1e-12


def test_bumps_give_boundaryless_identity():
    F, G = bump([0.45, 0.5], 0.3, 2), bump([0.55, 0.5], 0.3, 2)
    rep = green_combined(SHEAR, MU, F, G, UNIT, 16, panels=32)
    assert abs(rep.lhs) < 1e-9 and abs(rep.rhs) < 1e-9
    assert rep.extra["int_F_lapL_G"] == pytest.approx(rep.extra["int_G_lapR_F"], abs=1e-9)
    gl = green_left(SHEAR, MU, F, G, UNIT, 16, panels=32)
    assert abs(gl.lhs + gl.bulk) < 1e-8


def test_green_riemannian_examples():
    rep = green_riemannian(EUCLID, EUCLID, "x1", "x1^2*x2", UNIT, 8)
    classic = green_left(EUCLID, MU, "x1", "x1^2*x2", UNIT, 8)
    assert rep.lhs == pytest.approx(classic.lhs, abs=1e-14)
    hyp = catalog.get("hyperbolic-half-plane")
    box = Box((0.0, 1.0), (1.0, 2.0))
    g = structure(hyp.structure.matrix, box=box)
    rep = green_riemannian(g, g, 1.0, "log(x2)", box, 12)
    assert rep.lhs == pytest.approx(-0.5, abs=1e-10)
    assert rep.residual < 1e-10 and rep.extra["forms_gap"] < 1e-10


def test_riemannian_boundary_forms_agree_on_random_spd():
    rng = np.random.default_rng(7)
    for _ in range(20):
        M = rng.standard_normal((2, 2))
        G = M @ M.T + 0.5 * np.eye(2)
        c = rng.uniform(-0.3, 0.3, 2)
        g = structure([[f"{G[0, 0]:.6f} + {c[0]:.4f}*x1^2", f"{G[0, 1]:.6f}"],
                       [f"{G[1, 0]:.6f}", f"{G[1, 1]:.6f} + {c[1]:.4f}*x2^2"]], box=UNIT)
        B = rng.uniform(-1, 1, (2, 2)) + 3 * np.eye(2)
        rep = green_riemannian(structure(B, box=UNIT), g, "x1*x2", "sin(x1) + x2^2", UNIT, 10)
        assert rep.extra["forms_gap"] < 1e-10
        assert rep.residual < 1e-8


def test_symplectic_green_examples():
    sym = catalog.get("canonical-symplectic")
    rep = symplectic_green(sym.structure, 1.0, "x1", "x2", UNIT, 8)
    assert rep.lhs == pytest.approx(1.0, abs=1e-13) and rep.residual < 1e-12
    rep = symplectic_green(sym.structure, 1.0, bump([0.5, 0.5], 0.3, 2), "x1^2*x2", UNIT, 16, panels=32)
    assert abs(rep.lhs) < 1e-8
    e = catalog.get("exp-symplectic")
    rep = symplectic_green(e.structure, "exp(x1)", "x1^2*x2", "sin(x2) + x1", e.box, 12)
    assert rep.residual < 1e-8


def test_dirichlet_examples():
    assert dirichlet_energy(SHEAR, MU, "x1", UNIT, 4) == pytest.approx(0.5, abs=1e-15)
    assert dirichlet_energy(EUCLID, MU, "x1^2", UNIT, 4) == pytest.approx(2 / 3, abs=1e-15)
    sym = catalog.get("canonical-symplectic")
    with pytest.warns(UserWarning, match="skew"):
        assert dirichlet_energy(sym.structure, sym.volume, "x1^3*x2", UNIT, 8) == pytest.approx(0.0, abs=1e-15)


def test_euler_lagrange_examples():
    dF = bump([0.5, 0.5], 0.3, 2)
    rep = el_residual(SHEAR, MU, "x1 + 2*x2", dF, UNIT)
    assert abs(rep.numeric) < 1e-12 and abs(rep.analytic) < 1e-12
    rep = el_residual(EUCLID, MU, "x1^2 - x2^2", dF, UNIT)
    assert abs(rep.numeric) < 1e-8 and abs(rep.analytic) < 1e-12
    rep = el_residual(SHEAR, MU, "x1^2 + x2^2", dF, UNIT, 16, 1e-4)
    assert rep.residual < 1e-6
    # closed form: -4 * int(bump) = -4 * pi r^2 e E_2(1)
    from scipy.special import expn

    assert rep.analytic == pytest.approx(-4 * math.pi * 0.09 * math.e * expn(2, 1.0), rel=1e-7)


def test_euler_lagrange_requires_interior_variation():
    from geomops.errors import PreconditionError

    with pytest.raises(PreconditionError):
        el_residual(SHEAR, MU, "x1^2", "x1", UNIT)


@given(st.integers(0, 10_000))
def test_divergence_theorem(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-0.5, 0.5, 2)
    mu = density_volume(f"exp({a[0]:.4f}*x1 + {a[1]:.4f}*x2) * (1 + x1^2)", 2, UNIT)
    c = rng.uniform(-1, 1, 6)
    X = vector([f"{c[0]:.4f} + {c[1]:.4f}*x1*x2 + sin({c[2]:.4f}*x2)", f"{c[3]:.4f}*x1^2 + cos({c[4]:.4f}*x1*x2) + {c[5]:.4f}"], 2)
    rule = QuadRule.on_box(UNIT, 12)
    bulk = rule.integrate_values(divergence(mu, X)(rule.nodes) * mu.density(rule.nodes))
    assert abs(bulk - integrate_boundary_flux(mu, X, None, UNIT, 12)) < 1e-8


def test_green_residual_decreases_with_order():
    F, G = "sin(3*x1)*exp(x2)", "cos(2*x1*x2)"
    res = [green_left(SHEAR, MU, F, G, UNIT, o).residual for o in (4, 8, 16)]
    assert res[1] < res[0] and (res[2] < res[1] or res[2] < 1e-13)


def test_quadrature_is_thread_count_independent(monkeypatch):
    F, G = "sin(3*x1)*exp(x2)", "cos(2*x1*x2)"
    monkeypatch.setenv("GEO_THREADS", "1")
    one = green_left(SHEAR, MU, F, G, UNIT, 16, panels=4)
    monkeypatch.setenv("GEO_THREADS", "4")
    four = green_left(SHEAR, MU, F, G, UNIT, 16, panels=4)
    assert one.to_dict() == four.to_dict()
