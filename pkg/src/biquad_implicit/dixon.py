"""Dixon polynomial and Cayley matrix of a biquadratic patch.

Polynomials here live in the four variables ``(u, v, alpha, beta)`` and are
stored sparsely as ``{(i, j, k, l): coefficient}``.  A coefficient is either a
scalar or a length-4 array ``(A, B, C, D)`` standing for the linear form
``A*x + B*y + C*z + D`` in the query point.  Scalars may be floats or
``Fraction`` objects; the same code runs the exact-rational mode.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError
from .geometry import QUAD, TRIANGLE, LinearForm, residual_system

U, V, ALPHA, BETA = range(4)

# Frozen monomial orderings. Rows are (alpha, beta) exponents, columns (u, v).
TRIANGLE_ROWS = ((0, 0), (1, 0), (0, 1), (0, 2), (1, 1))
TRIANGLE_COLS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1))
QUAD_ROWS = ((0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2), (0, 3), (1, 3))
QUAD_COLS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (3, 0), (2, 1), (3, 1))

BASES = {TRIANGLE: (TRIANGLE_ROWS, TRIANGLE_COLS), QUAD: (QUAD_ROWS, QUAD_COLS)}

# below this fraction of its natural magnitude the Dixon polynomial is treated as identically zero
DEGENERATE_RTOL = 1e-12
DIVISION_RTOL = 1e-12
# float cancellation leaves residue in monomials outside the basis; larger values are a bug
BASIS_RTOL = 1e-12


def _is_zero(c) -> bool:
    if isinstance(c, np.ndarray):
        return not any(c)
    return c == 0


def _magnitude(c) -> float:
    if isinstance(c, np.ndarray):
        return float(max(abs(x) for x in c))
    return float(abs(c))


def _max_magnitude(p: dict) -> float:
    return max((_magnitude(c) for c in p.values()), default=0.0)


def _add(p: dict, q: dict, sign: int = 1) -> dict:
    out = dict(p)
    for e, c in q.items():
        if e in out:
            s = out[e] + c if sign > 0 else out[e] - c
            if _is_zero(s):
                del out[e]
            else:
                out[e] = s
        elif not _is_zero(c):
            out[e] = c if sign > 0 else -c
    return out


def _mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            if e in out:
                out[e] = out[e] + c1 * c2
            else:
                out[e] = c1 * c2
    return {e: c for e, c in out.items() if not _is_zero(c)}


def _lift(poly_uv: dict, first: int, second: int) -> dict:
    """Place a ``(u, v)`` polynomial onto two of the four variables."""
    out = {}
    for (i, j), c in poly_uv.items():
        e = [0, 0, 0, 0]
        e[first] += i
        e[second] += j
        out[tuple(e)] = c
    return out


def divide_by_difference(p: dict, var: int, root: int, exact: bool = False,
                         scale: float | None = None) -> dict:
    """Synthetic division of ``p`` by ``(x_var - x_root)``.

    ``p`` is read as a polynomial in ``x_var`` whose coefficients are
    polynomials in the remaining variables; the root ``x_root`` is itself a
    variable, so multiplying by it is an exponent shift.

    Raises
    ------
    ConsistencyError
        If the remainder is not zero (exactly, in exact mode; otherwise to
        ``DIVISION_RTOL`` relative to ``scale``, by default the largest
        coefficient of ``p``).
    """
    by_power: dict = {}
    for e, c in p.items():
        rest = list(e)
        k = rest[var]
        rest[var] = 0
        by_power.setdefault(k, {})[tuple(rest)] = c
    top = max(by_power, default=0)

    def shifted(poly: dict) -> dict:
        out = {}
        for e, c in poly.items():
            e = list(e)
            e[root] += 1
            out[tuple(e)] = c
        return out

    quotient: dict = {}
    carry: dict = {}
    for k in range(top, 0, -1):
        carry = _add(by_power.get(k, {}), shifted(carry))
        for e, c in carry.items():
            e = list(e)
            e[var] = k - 1
            quotient[tuple(e)] = c
    remainder = _add(by_power.get(0, {}), shifted(carry))

    if exact:
        if remainder:
            raise ConsistencyError("exact division left a nonzero remainder")
    else:
        limit = DIVISION_RTOL * (_max_magnitude(p) if scale is None else scale)
        if _max_magnitude(remainder) > limit:
            raise ConsistencyError(
                f"division remainder {_max_magnitude(remainder):.3g} exceeds {limit:.3g}")
    return quotient


@dataclass(frozen=True)
class DixonPoly:
    """Dixon polynomial ``delta``: ``{(u, v, alpha, beta) exponents: (A, B, C, D)}``."""

    kind: str
    terms: dict
    degenerate: bool = False

    def support(self) -> set:
        """Distinct ``((alpha, beta), (u, v))`` exponent pairs present."""
        return {((e[ALPHA], e[BETA]), (e[U], e[V])) for e in self.terms}

    def evaluate(self, u, v, alpha, beta, q) -> float:
        qh = np.append(np.asarray(q, dtype=float), 1.0)
        return sum(float(np.dot(np.asarray(c, dtype=float), qh))
                   * u ** e[U] * v ** e[V] * alpha ** e[ALPHA] * beta ** e[BETA]
                   for e, c in self.terms.items())


def _rows(rs):
    """Rows of the Dixon determinant after the row operations r1-r2 and r2-r3.

    These preserve the determinant and cancel the query-point terms from the
    first two rows, which then carry scalar coefficients only.
    """
    f_uv = [_lift(p, U, V) for p in rs.polys]
    f_ub = [_lift(p, U, BETA) for p in rs.polys]
    f_ab = [_lift(p, ALPHA, BETA) for p in rs.polys]
    r1 = [_add(a, b, -1) for a, b in zip(f_uv, f_ub)]
    r2 = [_add(a, b, -1) for a, b in zip(f_ub, f_ab)]

    def scalar(poly):
        out = {}
        for e, c in poly.items():
            if any(c[:3]):
                raise ConsistencyError("query-point terms survived the row difference")
            out[e] = c[3]
        return out

    return [scalar(p) for p in r1], [scalar(p) for p in r2], f_ab


def _cofactor_det(r1, r2, r3) -> dict:
    det: dict = {}
    for i, (j, k), sign in ((0, (1, 2), 1), (1, (0, 2), -1), (2, (0, 1), 1)):
        minor = _add(_mul(r2[j], r3[k]), _mul(r2[k], r3[j]), -1)
        det = _add(det, _mul(r1[i], minor), sign)
    return det


def dixon_determinant(rs) -> dict:
    """``det[f(u,v); f(u,beta); f(alpha,beta)]`` before dividing out ``(u-alpha)(v-beta)``."""
    return _cofactor_det(*_rows(rs))


def build_dixon_delta(rs, exact: bool = False) -> DixonPoly:
    """Dixon polynomial of a residual system.

    Expands ``det[f(u,v); f(u,beta); f(alpha,beta)]`` by cofactors along the
    first row, then divides exactly by ``(u - alpha)`` and then ``(v - beta)``.
    """
    r1, r2, r3 = _rows(rs)
    det = _cofactor_det(r1, r2, r3)

    if exact:
        quotient = divide_by_difference(det, U, ALPHA, exact=True)
        quotient = divide_by_difference(quotient, V, BETA, exact=True)
        return DixonPoly(rs.kind, quotient, not quotient)

    # natural size of the determinant: product of the row magnitudes
    scale = float(np.prod([max(_max_magnitude(p) for p in row) for row in (r1, r2, r3)]))
    if _max_magnitude(det) <= DEGENERATE_RTOL * scale:
        return DixonPoly(rs.kind, {}, True)
    scale = max(scale, _max_magnitude(det))
    quotient = divide_by_difference(det, U, ALPHA, scale=scale)
    quotient = divide_by_difference(quotient, V, BETA, scale=scale)
    if _max_magnitude(quotient) <= DEGENERATE_RTOL * scale:
        return DixonPoly(rs.kind, {}, True)
    return DixonPoly(rs.kind, _drop_off_basis_residue(rs.kind, quotient))


def _in_basis(kind: str, e: tuple) -> bool:
    rows, cols = BASES[kind]
    return (e[ALPHA], e[BETA]) in rows and (e[U], e[V]) in cols


def _drop_off_basis_residue(kind: str, terms: dict) -> dict:
    limit = BASIS_RTOL * _max_magnitude(terms)
    out = {}
    for e, c in terms.items():
        if _in_basis(kind, e):
            out[e] = c
        elif _magnitude(c) > limit:
            raise ConsistencyError(
                f"Dixon monomial {e} outside the {kind} basis has magnitude {_magnitude(c):.3g}")
    return out


@dataclass(frozen=True)
class CayleyMatrix:
    """Center matrix of ``delta = rows(alpha, beta)^T . M . cols(u, v)``.

    ``coeffs[i, j]`` holds ``(A, B, C, D)`` of entry ``m_ij``; ``rows[i]`` is
    an ``(alpha, beta)`` exponent pair and ``cols[j]`` a ``(u, v)`` pair.
    """

    kind: str
    rows: tuple
    cols: tuple
    coeffs: np.ndarray
    degenerate: bool = False

    @property
    def n(self) -> int:
        return len(self.rows)

    def entry(self, i: int, j: int) -> LinearForm:
        return LinearForm(*self.coeffs[i, j])

    def zero_cells(self) -> list:
        return [(i, j) for i in range(self.n) for j in range(self.n)
                if all(c == 0 for c in self.coeffs[i, j])]

    def coefficient_scale(self) -> float:
        return float(np.max(np.abs(self.coeffs.astype(float)))) if self.coeffs.size else 0.0


def cayley_from_dixon(delta: DixonPoly) -> CayleyMatrix:
    rows, cols = BASES[delta.kind]
    row_index = {m: i for i, m in enumerate(rows)}
    col_index = {m: j for j, m in enumerate(cols)}
    exact = any(isinstance(c, np.ndarray) and c.dtype == object for c in delta.terms.values())
    coeffs = np.zeros((len(rows), len(cols), 4), dtype=object if exact else float)
    if exact:
        coeffs[...] = 0
    for e, c in delta.terms.items():
        i = row_index.get((e[ALPHA], e[BETA]))
        j = col_index.get((e[U], e[V]))
        if i is None or j is None:
            raise ConsistencyError(f"Dixon monomial {e} is outside the {delta.kind} basis")
        coeffs[i, j] = c
    if not exact:
        coeffs.setflags(write=False)
    return CayleyMatrix(delta.kind, rows, cols, coeffs, delta.degenerate)


def build_cayley_matrix(net, exact: bool = False) -> CayleyMatrix:
    """Cayley matrix of a triangle (5x5) or quad (8x8) net.

    With ``exact=True`` the whole construction runs over ``Fraction`` and the
    entries are exact rationals.
    """
    return cayley_from_dixon(build_dixon_delta(residual_system(net, exact), exact))


def matrix_at(cm: CayleyMatrix, q) -> np.ndarray:
    """Numeric Cayley matrix with the query point ``q`` substituted."""
    x, y, z = (float(c) for c in q)
    c = cm.coeffs
    if c.dtype == object:
        c = c.astype(float)
    return c[..., 0] * x + c[..., 1] * y + c[..., 2] * z + c[..., 3]
