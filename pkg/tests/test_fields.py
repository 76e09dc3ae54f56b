import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geomops.errors import DimensionError, OrderError
from geomops.fields import DiffeoMap, compose, constant, hessian, identity_map, jacobian, matrix, scalar, vector
from geomops.calculus import grad_left
from geomops.measure import laplace_left, lebesgue
from geomops.structure import structure


def test_jacobian_examples():
    phi = DiffeoMap.from_exprs(["x1 + x2", "x2"], ["x1 - x2", "x2"])
    np.testing.assert_array_equal(jacobian(phi, [0.3, -2.0]), [[1, 1], [0, 1]])
    np.testing.assert_array_equal(jacobian(identity_map(3), [1.0, 2.0, 3.0]), np.eye(3))
    sq = vector(["x1^2", "x1*x2"], 2)
    np.testing.assert_allclose(jacobian(sq, [1.0, 2.0]), [[2, 0], [2, 1]])


def test_hessian_examples():
    np.testing.assert_array_equal(hessian(scalar("x1*x2", 2), [0.0, 0.0]), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(hessian(scalar("x1^2+x2^2", 2), [5.0, -1.0]), np.diag([2, 2]))
    e = math.e
    np.testing.assert_allclose(hessian(scalar("exp(x1*x2)", 2), [1.0, 1.0]), [[e, 2 * e], [2 * e, e]], rtol=1e-14)


def test_compose_examples():
    shift = DiffeoMap.from_exprs(["x1 + 1", "x2"])
    F = compose(scalar("x1", 2), shift)
    assert F([2.0, 7.0]) == 3.0
    G = scalar("sin(x1)*x2", 2)
    pts = np.array([[0.1, 0.2], [1.5, -3.0]])
    np.testing.assert_array_equal(compose(G, identity_map(2))(pts), G(pts))
    H = compose(scalar("x1^2", 2), DiffeoMap.from_exprs(["2*x1", "x2"]))
    np.testing.assert_allclose(H.jet([1.0, 0.0], 1).grad, [8, 0])


def test_compose_dimension_mismatch():
    with pytest.raises(DimensionError):
        compose(scalar("x1", 3), identity_map(2))


def test_order_tracking_fails_at_construction():
    b = structure([[1, 0], [0, 1]])
    mu = lebesgue(2)
    lap = laplace_left(b, mu, scalar("x1^2", 2))
    assert lap.max_order == 0
    with pytest.raises(OrderError):
        laplace_left(b, mu, lap)
    assert grad_left(b, scalar("x1", 2)).max_order == 1


def test_arithmetic_on_fields():
    F, G = scalar("x1", 2), scalar("x2^2", 2)
    p = np.array([2.0, 3.0])
    assert (F * G + 1.0)(p) == 19.0
    assert (2.0 / F)(p) == 1.0
    assert (F - G).jet(p, 1).grad.tolist() == [1.0, -6.0]
    assert constant(4.0, 2)(p) == 4.0


def test_matrix_field_algebra():
    A = matrix([["x1", "1"], ["0", "x2"]], 2)
    p = np.array([[2.0, 3.0]])
    np.testing.assert_array_equal((A @ A.T)(p)[0], np.array([[2, 1], [0, 3]]) @ np.array([[2, 0], [1, 3]]))


def test_declared_inverse_residual():
    phi = DiffeoMap.from_exprs(["x1 + sin(x2)", "x2"], ["x1 - sin(x2)", "x2"])
    pts = np.random.default_rng(0).uniform(-2, 2, (20, 2))
    assert phi.inverse_residual(pts) < 1e-14


def _random_map(rng, dim):
    comps = []
    for k in range(dim):
        a = rng.uniform(-0.4, 0.4, dim)
        comps.append(f"x{k + 1} + " + " + ".join(f"{c:.3f}*sin(x{i + 1})" for i, c in enumerate(a)))
    return vector(comps, dim)


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_chain_rule(seed, dim):
    rng = np.random.default_rng(seed)
    phi, psi = _random_map(rng, dim), _random_map(rng, dim)
    p = rng.uniform(-1, 1, dim)
    lhs = jacobian(compose(phi, psi), p)
    rhs = jacobian(phi, psi(p)) @ jacobian(psi, p)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@given(st.integers(0, 10_000))
def test_hessian_exactly_symmetric(seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1, 1, 3)
    F = scalar(f"exp({c[0]:.3f}*x1*x2) + sin(x2 - {c[1]:.3f}*x3^2) * x1 / (2 + x3^2)", 3)
    H = hessian(F, rng.uniform(-1, 1, 3))
    np.testing.assert_array_equal(H, H.T)
