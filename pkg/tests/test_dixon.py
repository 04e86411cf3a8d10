from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biquad_implicit import io
from biquad_implicit.dixon import (
    ALPHA, BETA, QUAD_COLS, QUAD_ROWS, TRIANGLE_COLS, TRIANGLE_ROWS, U, V, build_cayley_matrix,
    build_dixon_delta, dixon_determinant, divide_by_difference, matrix_at,
)
from biquad_implicit.geometry import QUAD, TRIANGLE, QuadNet, TriangleNet, bulged_triangle, residual_system

from _support import cofactor_det, random_net, random_quad, random_triangle, random_uv

STRUCTURAL_ZEROS = [(3, 4), (4, 3)]


def _eval_form_poly(poly, point, q):
    """Evaluate ``{(i,j,k,l): (A,B,C,D)}`` at ``(u, v, alpha, beta)`` and ``q`` exactly."""
    qh = list(q) + [1]
    total = 0
    for e, c in poly.items():
        mono = 1
        for x, k in zip(point, e):
            mono *= x ** k
        total += mono * sum(ci * qi for ci, qi in zip(c, qh))
    return total


def _mul_difference(poly, var, root):
    """Multiply a polynomial by ``(x_var - x_root)``."""
    out = {}
    for e, c in poly.items():
        for idx, sign in ((var, 1), (root, -1)):
            f = list(e)
            f[idx] += 1
            f = tuple(f)
            out[f] = out.get(f, 0) + sign * np.asarray(c)
    return out


def test_bases():
    cm = build_cayley_matrix(bulged_triangle())
    assert cm.rows == TRIANGLE_ROWS == ((0, 0), (1, 0), (0, 1), (0, 2), (1, 1))
    assert cm.cols == TRIANGLE_COLS == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1))
    assert cm.coeffs.shape == (5, 5, 4)
    cq = build_cayley_matrix(random_quad(np.random.default_rng(0)))
    assert cq.rows == QUAD_ROWS and cq.cols == QUAD_COLS and cq.coeffs.shape == (8, 8, 4)


def test_undivided_determinant_vanishes_on_the_diagonal():
    net = random_triangle(np.random.default_rng(1))
    rs = residual_system(net, exact=True)
    det = dixon_determinant(rs)
    q = [Fraction(3, 7), Fraction(-2, 5), Fraction(1, 3)]
    for u, v in ((Fraction(1, 5), Fraction(2, 7)), (Fraction(3, 4), Fraction(-1, 9))):
        assert _eval_form_poly(det, (u, v, u, v), q) == 0
        assert _eval_form_poly(det, (u, v, Fraction(5, 11), v), q) == 0
        assert _eval_form_poly(det, (u, v, u, Fraction(5, 11)), q) == 0


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_exact_division_reconstructs_the_determinant(kind):
    rs = residual_system(random_net(np.random.default_rng(2), kind), exact=True)
    det = dixon_determinant(rs)
    delta = build_dixon_delta(rs, exact=True)
    back = _mul_difference(_mul_difference(delta.terms, V, BETA), U, ALPHA)
    keys = set(det) | set(back)
    zero = np.zeros(4, dtype=object)
    for e in keys:
        assert list(np.asarray(det.get(e, zero)) - np.asarray(back.get(e, zero))) == [0, 0, 0, 0]


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_float_division_reconstructs_the_determinant(kind):
    rs = residual_system(random_net(np.random.default_rng(3), kind))
    det = dixon_determinant(rs)
    back = _mul_difference(_mul_difference(build_dixon_delta(rs).terms, V, BETA), U, ALPHA)
    scale = max(float(np.max(np.abs(c))) for c in det.values())
    for e in set(det) | set(back):
        diff = np.asarray(det.get(e, np.zeros(4))) - np.asarray(back.get(e, np.zeros(4)))
        assert np.max(np.abs(diff)) <= 1e-12 * scale


def test_division_rejects_a_remainder():
    # u + 1 is not divisible by u - alpha
    with pytest.raises(Exception):
        divide_by_difference({(1, 0, 0, 0): Fraction(1), (0, 0, 0, 0): Fraction(1)}, U, ALPHA, exact=True)


def test_division_of_a_simple_difference():
    # u^2 - alpha^2 = (u - alpha)(u + alpha)
    p = {(2, 0, 0, 0): Fraction(1), (0, 0, 2, 0): Fraction(-1)}
    assert divide_by_difference(p, U, ALPHA, exact=True) == {(1, 0, 0, 0): 1, (0, 0, 1, 0): 1}


@pytest.mark.parametrize("kind, bound", [(TRIANGLE, 25), (QUAD, 64)])
def test_support_fits_the_basis(kind, bound):
    rng = np.random.default_rng(4)
    for _ in range(20):
        delta = build_dixon_delta(residual_system(random_net(rng, kind)))
        support = delta.support()
        rows, cols = (TRIANGLE_ROWS, TRIANGLE_COLS) if kind == TRIANGLE else (QUAD_ROWS, QUAD_COLS)
        assert all(r in rows and c in cols for r, c in support)
        assert len(support) <= bound


def test_triangle_exact_support_size():
    rng = np.random.default_rng(4)
    for _ in range(5):
        delta = build_dixon_delta(residual_system(random_triangle(rng), exact=True), exact=True)
        assert len(delta.support()) == 23


def test_triangle_structural_zeros_exact():
    rng = np.random.default_rng(5)
    for _ in range(20):
        assert build_cayley_matrix(random_triangle(rng), exact=True).zero_cells() == STRUCTURAL_ZEROS


def test_bulged_net_has_additional_zeros():
    cells = build_cayley_matrix(bulged_triangle(), exact=True).zero_cells()
    assert set(STRUCTURAL_ZEROS) <= set(cells)
    assert set(cells) == {(1, 3), (3, 2), (3, 4), (4, 3)}


def test_random_quad_has_no_zero_cells():
    assert build_cayley_matrix(random_quad(np.random.default_rng(6)), exact=True).zero_cells() == []


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_exact_and_float_agree(kind):
    net = random_net(np.random.default_rng(7), kind)
    exact = build_cayley_matrix(net, exact=True).coeffs.astype(float)
    approx = build_cayley_matrix(net).coeffs
    assert np.allclose(approx, exact, rtol=0, atol=1e-13 * np.max(np.abs(exact)))


def test_quad_delta_vanishes_at_surface_point():
    net = random_quad(np.random.default_rng(8))
    delta = build_dixon_delta(residual_system(net))
    q = net.p.mean(axis=(0, 1))
    from biquad_implicit.geometry import eval_quad
    q = eval_quad(net, (0.3, 0.7))
    # the residuals share the root (u, v) = (0.3, 0.7) so delta vanishes for every alpha, beta
    scale = max(float(np.max(np.abs(c))) for c in delta.terms.values())
    assert abs(delta.evaluate(0.3, 0.7, 0.9, 0.2, q)) <= 1e-12 * scale


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_delta_matches_brute_force_quotient(kind):
    # independent route: 3x3 numeric determinant divided by (u - alpha)(v - beta)
    rng = np.random.default_rng(9)
    net = random_net(rng, kind)
    rs = residual_system(net)
    delta = build_dixon_delta(rs)
    for _ in range(20):
        u, v, a, b = rng.uniform(-1, 1, 4)
        q = rng.uniform(-1, 1, 3)
        m = [rs.evaluate(u, v, q), rs.evaluate(u, b, q), rs.evaluate(a, b, q)]
        expected = cofactor_det(m) / ((u - a) * (v - b))
        got = delta.evaluate(u, v, a, b, q)
        assert got == pytest.approx(expected, rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_matrix_bilinear_form_equals_delta(kind):
    rng = np.random.default_rng(10)
    net = random_net(rng, kind)
    delta = build_dixon_delta(residual_system(net))
    cm = build_cayley_matrix(net)
    u, v, a, b = rng.uniform(-1, 1, 4)
    q = rng.uniform(-1, 1, 3)
    rows = np.array([a ** i * b ** j for i, j in cm.rows])
    cols = np.array([u ** i * v ** j for i, j in cm.cols])
    assert rows @ matrix_at(cm, q) @ cols == pytest.approx(delta.evaluate(u, v, a, b, q), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_scaling_the_net_scales_coefficients_cubically(kind):
    rng = np.random.default_rng(11)
    net = random_net(rng, kind)
    s = 4.0
    scaled = net.map_points(lambda p: s * p)
    a = build_cayley_matrix(net).coeffs
    b = build_cayley_matrix(scaled).coeffs
    # each entry is a cubic form in the control points and the query point together
    q = rng.uniform(-1, 1, 3)
    assert np.allclose(matrix_at(build_cayley_matrix(scaled), s * q), s ** 3 * matrix_at(build_cayley_matrix(net), q),
                       rtol=1e-12, atol=1e-12 * np.max(np.abs(b)))
    assert a.shape == b.shape


def test_all_zero_net_is_degenerate():
    cm = build_cayley_matrix(TriangleNet(*np.zeros((6, 3))))
    assert cm.degenerate and not np.any(cm.coeffs)
    cq = build_cayley_matrix(QuadNet(np.zeros((3, 3, 3))), exact=True)
    assert cq.degenerate and not np.any(cq.coeffs.astype(float))


def test_collinear_net_is_degenerate():
    pts = np.outer(np.linspace(0, 1, 6), [1.0, 2.0, -1.0])
    assert build_cayley_matrix(TriangleNet(*pts)).degenerate


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_matrix_is_affine_in_the_query_point(seed):
    rng = np.random.default_rng(seed)
    cm = build_cayley_matrix(random_triangle(rng))
    p, q = rng.uniform(-2, 2, (2, 3))
    t = rng.uniform(-1, 1)
    lhs = matrix_at(cm, (1 - t) * p + t * q)
    rhs = (1 - t) * matrix_at(cm, p) + t * matrix_at(cm, q)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * (1 + np.max(np.abs(lhs))))


@pytest.mark.parametrize("kind", [TRIANGLE, QUAD])
def test_json_round_trip(kind):
    cm = build_cayley_matrix(random_net(np.random.default_rng(12), kind))
    back = io.cayley_from_json_dict(io.loads(io.dumps(io.cayley_to_json_dict(cm))), kind)
    assert back.rows == cm.rows and back.cols == cm.cols
    assert np.array_equal(back.coeffs, cm.coeffs)


def test_json_rejects_wrong_shape():
    doc = io.cayley_to_json_dict(build_cayley_matrix(bulged_triangle()))
    doc["entries"] = doc["entries"][:4]
    with pytest.raises(ValueError):
        io.cayley_from_json_dict(doc, TRIANGLE)
