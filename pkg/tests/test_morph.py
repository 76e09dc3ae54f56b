import math

import numpy as np
import pytest

from geomops import catalog
from geomops.box import Box
from geomops.errors import PreconditionError
from geomops.fields import DiffeoMap, identity_map, vector
from geomops.measure import density_volume, lebesgue
from geomops.morph import (
    check_bracket_naturality,
    check_div_naturality,
    check_grad_naturality,
    check_group_property,
    check_laplace_naturality,
    is_geometromorphism,
    pullback_structure,
    pullback_volume,
    pushforward_vector,
)
from geomops.structure import structure

BOX = Box.cube(2)
PTS = BOX.probes(50)
EUCLID = structure(np.eye(2), box=BOX)
OMEGA = structure([[0, 1], [-1, 0]], box=BOX)
SHEAR_MAP = DiffeoMap.from_exprs(["x1 + x2", "x2"], ["x1 - x2", "x2"], "shear")
STRETCH = DiffeoMap.from_exprs(["2*x1", "x2"], ["x1/2", "x2"], "stretch")


def _rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return DiffeoMap.from_exprs([f"{c!r}*x1 - {s!r}*x2", f"{s!r}*x1 + {c!r}*x2"],
                                [f"{c!r}*x1 + {s!r}*x2", f"-{s!r}*x1 + {c!r}*x2"], "rot")


def test_pullback_examples():
    np.testing.assert_allclose(pullback_structure(_rotation(0.7), EUCLID).matrix(PTS), np.broadcast_to(np.eye(2), (50, 2, 2)), atol=1e-15)
    np.testing.assert_allclose(pullback_structure(SHEAR_MAP, OMEGA).matrix(PTS), OMEGA.matrix(PTS), atol=0)
    hyp = catalog.get("hyperbolic-half-plane")
    scale = hyp.morphisms["scale"]
    hp = hyp.box.probes(50)
    np.testing.assert_allclose(pullback_structure(scale, hyp.structure).matrix(hp), hyp.structure.matrix(hp), rtol=1e-14)


def test_is_geometromorphism_examples():
    shear2 = structure([[1, 1], [0, 1]], box=BOX)
    shift = DiffeoMap.from_exprs(["x1 + 0.3", "x2 - 1"], ["x1 - 0.3", "x2 + 1"])
    rep = is_geometromorphism(shift, shear2, shear2, PTS)
    assert rep.passed and rep.max_residual == 0.0
    hyp = catalog.get("hyperbolic-half-plane")
    assert is_geometromorphism(hyp.morphisms["scale"], hyp.structure, hyp.structure).passed
    rep = is_geometromorphism(STRETCH, EUCLID, EUCLID, PTS)
    assert not rep.passed and rep.max_residual == 3.0
    assert rep.argmax_point is not None and rep.probe_count == 50


def test_pushforward_examples():
    shift = DiffeoMap.from_exprs(["x1 + 1", "x2"], ["x1 - 1", "x2"])
    X = vector(["2", "-1"], 2)
    np.testing.assert_array_equal(pushforward_vector(shift, X)(PTS), X(PTS))
    Y = vector(["x1*x2", "sin(x1)"], 2)
    np.testing.assert_allclose(pushforward_vector(identity_map(2), Y)(PTS), Y(PTS))
    np.testing.assert_array_equal(pushforward_vector(STRETCH, vector(["1", "0"], 2))(PTS), np.tile([2.0, 0.0], (50, 1)))


def test_pushforward_needs_inverse():
    with pytest.raises(PreconditionError):
        pushforward_vector(DiffeoMap.from_exprs(["2*x1", "x2"]), vector(["1", "0"], 2))


def test_pullback_volume_examples():
    mu = lebesgue(2, BOX)
    np.testing.assert_allclose(pullback_volume(SHEAR_MAP, mu).density(PTS), 1.0)
    np.testing.assert_allclose(pullback_volume(STRETCH, mu).density(PTS), 2.0)
    radial = density_volume("exp(-(x1^2 + x2^2))", 2, BOX)
    rot = _rotation(1.1)
    np.testing.assert_allclose(pullback_volume(rot, radial).density(PTS), radial.density(PTS), rtol=1e-14)
    flip = DiffeoMap.from_exprs(["x2", "x1"], ["x2", "x1"])
    assert pullback_volume(flip, mu).orientation == -1


def test_grad_naturality_examples():
    assert check_grad_naturality(identity_map(2), EUCLID, EUCLID, "x1^2*x2", PTS).max_residual == 0.0
    sym = catalog.get("canonical-symplectic")
    rep = check_grad_naturality(sym.morphisms["shear"], sym.structure, sym.structure, "x1^2 + x2^2", PTS)
    assert rep.max_residual < 1e-10
    hyp = catalog.get("hyperbolic-half-plane")
    rep = check_grad_naturality(hyp.morphisms["scale"], hyp.structure, hyp.structure, "log(x2)")
    assert rep.max_residual < 1e-10


def test_grad_naturality_refuses_non_geometromorphism():
    with pytest.raises(PreconditionError, match="not a geometromorphism"):
        check_grad_naturality(STRETCH, EUCLID, EUCLID, "x1", PTS)


def test_bracket_naturality_examples():
    assert check_bracket_naturality(identity_map(2), EUCLID, EUCLID, "x1", "x2^2", PTS).max_residual == 0.0
    shear2 = catalog.get("shear2")
    rep = check_bracket_naturality(shear2.morphisms["translate"], shear2.structure, shear2.structure, "x1", "x2", PTS)
    assert rep.max_residual == 0.0
    sym = catalog.get("canonical-symplectic")
    rep = check_bracket_naturality(sym.morphisms["shear"], sym.structure, sym.structure, "x1", "x2", PTS)
    assert rep.max_residual < 1e-14
    assert set(rep.breakdown) == {"bracket", "sym", "skew"}


def test_div_naturality_examples():
    mu = lebesgue(2, BOX)
    assert check_div_naturality(identity_map(2), mu, mu, vector(["x1", "x2"], 2), PTS).max_residual == 0.0
    assert check_div_naturality(SHEAR_MAP, mu, mu, vector(["x1", "x2"], 2), PTS).max_residual < 1e-14
    assert check_div_naturality(_rotation(0.4), mu, mu, vector(["x1", "-x2"], 2), PTS).max_residual < 1e-14
    with pytest.raises(PreconditionError):
        check_div_naturality(STRETCH, mu, mu, vector(["x1", "x2"], 2), PTS)


def test_laplace_naturality_examples():
    mu = lebesgue(2, BOX)
    assert check_laplace_naturality(identity_map(2), EUCLID, mu, EUCLID, mu, "x1^3", PTS).max_residual == 0.0
    hyp = catalog.get("hyperbolic-half-plane")
    rep = check_laplace_naturality(hyp.morphisms["scale"], hyp.structure, hyp.volume, hyp.structure, hyp.volume, "log(x2)")
    assert rep.max_residual < 1e-10
    sym = catalog.get("canonical-symplectic")
    rep = check_laplace_naturality(sym.morphisms["shear"], sym.structure, sym.volume, sym.structure, sym.volume,
                                   "x1^3*x2", PTS)
    assert rep.max_residual < 1e-12


def test_group_property_examples():
    shear2 = catalog.get("shear2")
    t1 = DiffeoMap.from_exprs(["x1 + 1", "x2"], ["x1 - 1", "x2"], "t1")
    t2 = DiffeoMap.from_exprs(["x1", "x2 - 0.5"], ["x1", "x2 + 0.5"], "t2")
    assert check_group_property([t1, t2], shear2.structure, PTS).passed
    sym = catalog.get("canonical-symplectic")
    s = sym.morphisms["shear"]
    assert check_group_property([s, s.after(s)], sym.structure, PTS).passed
    hyp = catalog.get("hyperbolic-half-plane")
    sc = hyp.morphisms["scale"]
    assert check_group_property([sc, sc.inverse], hyp.structure).passed


def test_group_property_needs_inverse():
    with pytest.raises(PreconditionError):
        check_group_property([DiffeoMap.from_exprs(["x1 + 1", "x2"])], EUCLID, PTS)


@pytest.mark.parametrize("name", catalog.DEFAULTS)
def test_functorial_pullback(name):
    e = catalog.get(name)
    pts = e.box.probes(50)
    maps = list(e.morphisms.values())
    for m1 in maps:
        for m2 in maps:
            lhs = pullback_structure(m1.after(m2), e.structure).matrix(pts)
            rhs = pullback_structure(m2, pullback_structure(m1, e.structure)).matrix(pts)
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@pytest.mark.parametrize("name", catalog.DEFAULTS)
def test_catalog_maps_are_equivariant(name):
    e = catalog.get(name)
    pts = e.box.probes(50)
    for m in e.morphisms.values():
        for F in e.pool(5):
            assert check_grad_naturality(m, e.structure, e.structure, F, pts).max_residual < 1e-8
