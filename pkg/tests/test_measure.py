import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geomops import catalog
from geomops.box import Box
from geomops.calculus import bracket, bracket_sym, directional_derivative, grad_left, grad_right
from geomops.errors import EvalDomainError, PreconditionError
from geomops.fields import scalar, vector
from geomops.measure import (
    VolumeForm,
    closedness_residual,
    density_volume,
    divergence,
    laplace_left,
    laplace_right,
    lebesgue,
    liouville_volume,
    pfaffian,
    rescale_volume,
    riemannian_volume,
)
from geomops.structure import structure

HALF_PLANE = Box((0.0, 0.5), (1.0, 2.0))


def _pts(box, count=50, seed=0):
    return box.random(count, np.random.default_rng(seed))


def test_divergence_examples():
    box = Box.cube(2)
    pts = _pts(box)
    np.testing.assert_allclose(divergence(lebesgue(2, box), vector(["x1", "x2"]))(pts), 2.0)
    mu = density_volume("exp(x1)", 2, box)
    np.testing.assert_allclose(divergence(mu, vector(["1", "0"]))(pts), 1.0, rtol=1e-14)
    hyp = density_volume("1/x2^2", 2, HALF_PLANE)
    np.testing.assert_allclose(divergence(hyp, vector(["0", "x2"]))(_pts(HALF_PLANE)), -1.0, rtol=1e-13)


def test_divergence_rejects_nonpositive_density():
    mu = density_volume("x1", 2, Box.cube(2))
    with pytest.raises(EvalDomainError):
        divergence(mu, vector(["1", "0"]))([[-0.5, 0.5]])


def test_riemannian_volume_examples():
    pts = _pts(HALF_PLANE)
    np.testing.assert_allclose(riemannian_volume(structure(np.eye(2))).density(pts), 1.0)
    hyp = structure([["1/x2^2", 0], [0, "1/x2^2"]], box=HALF_PLANE)
    np.testing.assert_allclose(riemannian_volume(hyp).density(pts), 1 / pts[:, 1] ** 2, rtol=1e-14)
    np.testing.assert_allclose(riemannian_volume(structure(np.diag([4.0, 9.0]))).density(pts), 6.0)


def test_riemannian_volume_needs_spd():
    with pytest.raises(PreconditionError):
        riemannian_volume(structure(np.diag([-1.0, 1.0])))


def test_pfaffian_values():
    assert pfaffian(np.array([[0.0, 1.0], [-1.0, 0.0]])) == 1.0
    J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    assert pfaffian(J4) == -1.0
    rng = np.random.default_rng(3)
    for n in (2, 4, 6, 8):
        M = rng.standard_normal((n, n))
        A = M - M.T
        assert pfaffian(A) ** 2 == pytest.approx(np.linalg.det(A), rel=1e-10)


def test_liouville_examples():
    box = Box.cube(2)
    pts = _pts(box)
    mu = liouville_volume(structure([[0, 1], [-1, 0]], box=box))
    assert mu.orientation == 1
    np.testing.assert_allclose(mu.density(pts), 1.0)
    J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    mu4 = liouville_volume(structure(J4, box=Box.cube(4)))
    assert mu4.orientation == 1
    np.testing.assert_allclose(mu4.density(_pts(Box.cube(4))), 1.0)
    mue = liouville_volume(structure([[0, "exp(x1)"], ["-exp(x1)", 0]], box=box))
    np.testing.assert_allclose(mue.density(pts), np.exp(pts[:, 0]), rtol=1e-14)


def test_liouville_preconditions():
    with pytest.raises(PreconditionError):
        liouville_volume(structure(np.eye(2)))
    with pytest.raises(PreconditionError):
        liouville_volume(structure(np.zeros((3, 3)) + np.triu(np.ones((3, 3)), 1) - np.tril(np.ones((3, 3)), -1)))


def test_liouville_warns_when_not_closed():
    b = structure([[0, 0, "1 + x2^2", 0], [0, 0, 0, 1], ["-1 - x2^2", 0, 0, 0], [0, -1, 0, 0]], box=Box.cube(4))
    assert closedness_residual(b) > 1e-3
    with pytest.warns(UserWarning, match="closed"):
        liouville_volume(b)


def test_laplacian_examples():
    box = Box.cube(2)
    pts = _pts(box)
    mu = lebesgue(2, box)
    F = "x1^2 + x2^2"
    np.testing.assert_allclose(laplace_left(structure(np.eye(2)), mu, F)(pts), 4.0)
    shear = structure([[1, 1], [0, 1]])
    np.testing.assert_allclose(laplace_left(shear, mu, F)(pts), 4.0)
    np.testing.assert_allclose(laplace_right(shear, mu, F)(pts), 4.0)
    hyp = catalog.get("hyperbolic-half-plane")
    hp = _pts(hyp.box)
    np.testing.assert_allclose(laplace_left(hyp.structure, hyp.volume, "log(x2)")(hp), -1.0, atol=1e-12)
    sym = catalog.get("canonical-symplectic")
    sp = _pts(sym.box)
    for name, G in sym.functions.items():
        assert np.max(np.abs(laplace_left(sym.structure, sym.volume, G)(sp))) < 1e-9, name


def test_rescale_examples():
    box = Box.cube(2)
    pts = _pts(box)
    mu = density_volume("1 + x1^2", 2, box)
    np.testing.assert_allclose(rescale_volume(mu, 2.0).density(pts), 2 * mu.density(pts))
    np.testing.assert_array_equal(rescale_volume(mu, 1.0).density(pts), mu.density(pts))
    neg = rescale_volume(mu, -3.0)
    assert neg.orientation == -1 and np.all(neg.density(pts) > 0)
    with pytest.raises(PreconditionError):
        rescale_volume(mu, "x1 - 0.5")


def test_change_of_volume_example():
    box = Box.cube(2)
    pts = box.probes(50)
    b = structure([[1, 1], [0, 1]])
    mu = lebesgue(2, box)
    f = scalar("exp(x1)", 2)
    omega = rescale_volume(mu, f)
    F = scalar("sin(x1)*x2^2", 2)
    lhs = laplace_left(b, omega, F)(pts) - laplace_left(b, mu, F)(pts)
    np.testing.assert_allclose(lhs, (bracket(b, f, F) / f)(pts), atol=1e-9)


ENTRIES = catalog.DEFAULTS


@pytest.mark.parametrize("name", ENTRIES)
def test_product_rule_and_defects(name):
    e = catalog.get(name)
    b, mu = e.structure, e.volume
    pts = _pts(e.box)
    F, G = e.functions["smooth"], e.functions["poly1"]
    B = b.matrix(pts)
    defects = []
    for lap, grad in ((laplace_left, grad_left), (laplace_right, grad_right)):
        d = lap(b, mu, F * G)(pts) - (F * lap(b, mu, G))(pts) - (G * lap(b, mu, F))(pts)
        gF, gG = grad(b, F)(pts), grad(b, G)(pts)
        cross = np.einsum("mi,mij,mj->m", gF, B, gG) + np.einsum("mi,mij,mj->m", gG, B, gF)
        np.testing.assert_allclose(d, cross, atol=1e-8)
        np.testing.assert_allclose(bracket_sym(b, F, G)(pts), 0.5 * d, atol=1e-8)
        defects.append(d)
    np.testing.assert_allclose(defects[0], defects[1], atol=1e-8)


@pytest.mark.parametrize("name", ENTRIES)
@pytest.mark.parametrize("phi", ["square", "exp", "sin"])
def test_laplacian_chain_rule(name, phi):
    e = catalog.get(name)
    b, mu = e.structure, e.volume
    pts = _pts(e.box)
    F = e.functions["smooth"]
    d1, d2 = {
        "square": (2.0 * F, scalar(2.0, e.dim)),
        "exp": (F.apply("exp"), F.apply("exp")),
        "sin": (F.apply("cos"), -F.apply("sin")),
    }[phi]
    FF = bracket(b, F, F)(pts)
    for lap in (laplace_left, laplace_right):
        lhs = lap(b, mu, F.apply(phi))(pts)
        np.testing.assert_allclose(lhs, d1(pts) * lap(b, mu, F)(pts) + d2(pts) * FF, atol=1e-8)


def test_symmetric_and_skew_collapse():
    pts = _pts(Box.cube(2))
    F = "sin(x1)*x2 + x1^3"
    mink = catalog.get("minkowski")
    mu = mink.volume
    np.testing.assert_allclose(laplace_left(mink.structure, mu, F)(pts), laplace_right(mink.structure, mu, F)(pts), atol=1e-12)
    # d'Alembertian: -F_11 + F_22
    x, y = pts.T
    np.testing.assert_allclose(laplace_left(mink.structure, mu, F)(pts), -(-np.sin(x) * y + 6 * x) - 0.0, atol=1e-12)
    b = structure([["0", "1 + x1^2"], ["-1 - x1^2", "0"]])
    np.testing.assert_allclose(laplace_left(b, mu, F)(pts), -laplace_right(b, mu, F)(pts), atol=1e-12)


@pytest.mark.parametrize("name", ["canonical-symplectic(4)", "exp-symplectic"])
def test_symplectic_rescaled_laplacian(name):
    e = catalog.get(name)
    pts = _pts(e.box, 100)
    f = scalar("exp(x1)", e.dim)
    omega = rescale_volume(e.volume, f)
    Xf = grad_left(e.structure, f)
    for H in e.polynomials + [e.functions["sumsq"]]:
        assert np.max(np.abs(laplace_left(e.structure, e.volume, H)(pts))) < 1e-8
        assert np.max(np.abs(laplace_right(e.structure, e.volume, H)(pts))) < 1e-8
        lhs = laplace_right(e.structure, omega, H)(pts)
        np.testing.assert_allclose(lhs, (directional_derivative(H, Xf) / f)(pts), atol=1e-8)
        np.testing.assert_allclose(laplace_left(e.structure, omega, H)(pts), -lhs, atol=1e-8)


@given(st.integers(0, 10_000))
def test_volume_independence_of_defect(seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-0.5, 0.5, 4)
    b = structure([[f"2 + {c[0]:.3f}*sin(x2)", f"{c[1]:.3f}"], [f"{c[2]:.3f}*x1", "1.5"]])
    box = Box.cube(2)
    mu = lebesgue(2, box)
    omega = rescale_volume(mu, f"exp({c[3]:.3f}*x1*x2)")
    F, G = scalar("x1^2*x2", 2), scalar("cos(x1 + x2)", 2)
    pts = _pts(box, 10, seed)
    for lap in (laplace_left, laplace_right):
        dm = lap(b, mu, F * G)(pts) - (F * lap(b, mu, G))(pts) - (G * lap(b, mu, F))(pts)
        dw = lap(b, omega, F * G)(pts) - (F * lap(b, omega, G))(pts) - (G * lap(b, omega, F))(pts)
        np.testing.assert_allclose(dm, dw, atol=1e-8)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_laplacian_linearity(a, c):
    e = catalog.get("mixed")
    pts = _pts(e.box, 10)
    F, G = e.functions["smooth"], e.functions["poly2"]
    for lap in (laplace_left, laplace_right):
        lhs = lap(e.structure, e.volume, a * F + c * G)(pts)
        rhs = a * lap(e.structure, e.volume, F)(pts) + c * lap(e.structure, e.volume, G)(pts)
        np.testing.assert_allclose(lhs, rhs, atol=1e-8)
