import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biquad_implicit.errors import DomainError
from biquad_implicit.geometry import (
    QUAD, TRIANGLE, DomainPoint, QuadNet, TriangleNet, bulged_triangle, eval_quad, eval_triangle,
    evaluate, monomial_coefficients, residual_system, surface_point,
)

from _support import casteljau, casteljau_quad, random_net, random_quad, random_uv


def test_triangle_corners_reproduce_anchor_points():
    net = bulged_triangle()
    assert np.array_equal(eval_triangle(net, (1, 0)), [1, 0, 0])
    assert np.array_equal(eval_triangle(net, (0, 1)), net.b020)
    assert np.array_equal(eval_triangle(net, (0, 0)), net.b002)


def test_triangle_centroid_by_hand():
    # (1/9)(b200 + b020 + b002) + (2/9)(b110 + b101 + b011) = (1 + 2.6)/9 per axis
    p = eval_triangle(bulged_triangle(), (1 / 3, 1 / 3))
    assert np.allclose(p, [0.4, 0.4, 0.4], rtol=0, atol=1e-15)


def test_triangle_scan_point_matches_casteljau():
    net = bulged_triangle()
    assert np.allclose(eval_triangle(net, (0.33, 0.33)), casteljau(net, 0.33, 0.33), rtol=0, atol=1e-15)


def test_quad_corners():
    net = random_quad(np.random.default_rng(0))
    for (u, v), (i, j) in (((0, 0), (0, 0)), ((1, 1), (2, 2)), ((1, 0), (2, 0)), ((0, 1), (0, 2))):
        assert np.array_equal(eval_quad(net, (u, v)), net.p[i, j])


def test_quad_midpoint_weights():
    net = random_quad(np.random.default_rng(1))
    w = np.array([1.0, 2.0, 1.0])
    expected = np.einsum("i,j,ijk->k", w, w, net.p) / 16
    assert np.allclose(eval_quad(net, (0.5, 0.5)), expected, rtol=0, atol=1e-15)
    assert np.allclose(casteljau_quad(net, 0.5, 0.5), expected, rtol=0, atol=1e-15)


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_evaluation_matches_casteljau(kind):
    rng = np.random.default_rng(2)
    for _ in range(200):
        net = random_net(rng, kind)
        u, v = random_uv(rng, kind)
        assert np.allclose(evaluate(net, (u, v)), casteljau(net, u, v), rtol=0, atol=1e-14)


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_monomial_form_matches_bernstein_form(kind):
    rng = np.random.default_rng(3)
    for _ in range(100):
        net = random_net(rng, kind)
        u, v = random_uv(rng, kind)
        coeffs = monomial_coefficients(net)
        assert np.allclose(surface_point(coeffs, u, v), evaluate(net, (u, v)), rtol=0, atol=1e-14)


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_partition_of_unity(kind):
    rng = np.random.default_rng(4)
    c = rng.uniform(-10, 10, 3)
    net = TriangleNet(*[c] * 6) if kind == TRIANGLE else QuadNet(np.broadcast_to(c, (3, 3, 3)))
    for _ in range(1000):
        p = evaluate(net, random_uv(rng, kind))
        assert np.all(np.abs(p - c) <= 4 * np.spacing(np.abs(c)))


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_residuals_vanish_at_generating_point(kind):
    rng = np.random.default_rng(5)
    for _ in range(1000):
        net = random_net(rng, kind)
        u, v = random_uv(rng, kind)
        q = evaluate(net, (u, v))
        r = residual_system(net).evaluate(u, v, q)
        assert np.all(np.abs(r) <= 1e-12 * (1 + np.linalg.norm(q)))


def test_residual_query_terms_live_in_constant_monomial():
    rs = residual_system(bulged_triangle())
    for k in range(3):
        const = rs.coefficient(k, 0, 0)
        assert const.as_tuple()[:3] == tuple(-1.0 if i == k else 0.0 for i in range(3))
        for (i, j) in rs.polys[k]:
            if (i, j) != (0, 0):
                assert not any(rs.coefficient(k, i, j).as_tuple()[:3])


def test_residual_u_squared_coefficient():
    # the monomial u^2 collects b200 + b002 - 2 b101 once w = 1 - u - v is expanded
    form = residual_system(bulged_triangle()).coefficient(0, 2, 0)
    assert form.as_tuple() == (0.0, 0.0, 0.0, 1.0 + 0.0 - 2 * 0.65)
    # the Bernstein weight of u^2 alone is b200_x = 1
    assert bulged_triangle().b200[0] == 1.0


def test_constant_quad_residuals_are_constant():
    c = np.array([0.3, -1.2, 2.5])
    rs = residual_system(QuadNet(np.broadcast_to(c, (3, 3, 3))))
    for k in range(3):
        for (i, j), coef in rs.polys[k].items():
            if (i, j) == (0, 0):
                assert np.array_equal(coef, [-(k == 0), -(k == 1), -(k == 2), c[k]])
            else:
                assert not np.any(coef)


def test_residual_degrees():
    rng = np.random.default_rng(6)
    tri = residual_system(random_net(rng, TRIANGLE))
    quad = residual_system(random_net(rng, QUAD))
    assert all(i + j <= 2 for poly in tri.polys for i, j in poly)
    assert all(i <= 2 and j <= 2 for poly in quad.polys for i, j in poly)


@pytest.mark.parametrize("uv", [(-0.1, 0.5), (0.6, 0.6), (0.2, 1.01), (float("nan"), 0.2)])
def test_triangle_domain_violations(uv):
    with pytest.raises(DomainError):
        eval_triangle(bulged_triangle(), uv)


@pytest.mark.parametrize("uv", [(-1e-9, 0.5), (1.5, 0.5), (0.5, 2.0)])
def test_quad_domain_violations(uv):
    with pytest.raises(DomainError):
        eval_quad(random_quad(np.random.default_rng(0)), uv)


def test_domain_point_kind_mismatch():
    with pytest.raises(DomainError):
        eval_quad(random_quad(np.random.default_rng(0)), DomainPoint(0.2, 0.2, TRIANGLE))
    assert DomainPoint(0.2, 0.3, TRIANGLE).w == pytest.approx(0.5)


def test_non_finite_control_points_rejected():
    pts = {k: (0.0, 0.0, 0.0) for k in ("b200", "b020", "b002", "b110", "b101", "b011")}
    pts["b110"] = (0.0, float("inf"), 0.0)
    with pytest.raises(ValueError):
        TriangleNet.from_dict(pts)
    with pytest.raises(ValueError):
        QuadNet(np.full((3, 3, 3), np.nan))


def test_nets_are_immutable():
    net = bulged_triangle()
    with pytest.raises(ValueError):
        net.b200[0] = 5.0
    with pytest.raises(AttributeError):
        net.b200 = np.zeros(3)


def test_exact_monomial_coefficients_agree_with_float():
    rng = np.random.default_rng(7)
    for kind in (TRIANGLE, QUAD):
        net = random_net(rng, kind)
        exact = monomial_coefficients(net, exact=True)
        approx = monomial_coefficients(net)
        for key in approx:
            assert np.allclose(np.asarray(exact[key], dtype=float), approx[key], rtol=0, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 2 ** 32 - 1))
def test_translation_commutes_with_evaluation(u, v, seed):
    if u + v > 1:
        u, v = 1 - v, 1 - u
    rng = np.random.default_rng(seed)
    net = random_net(rng, TRIANGLE)
    offset = rng.uniform(-5, 5, 3)
    assert np.allclose(evaluate(net.translated(offset), (u, v)), evaluate(net, (u, v)) + offset,
                       rtol=0, atol=1e-13)
