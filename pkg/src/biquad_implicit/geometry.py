"""Control nets, parametric evaluation and residual systems for biquadratic patches.

Two patch kinds are supported:

* ``TriangleNet`` - a quadratic Bezier triangle over barycentric ``(u, v)``
  with ``w = 1 - u - v``.
* ``QuadNet`` - a biquadratic tensor-product patch over the unit square.

Parametric maps are also kept in monomial form, ``P(u, v) = sum C_ij u^i v^j``,
which is what the resultant construction consumes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import DomainError

TRIANGLE = "triangle"
QUAD = "quad"

TRIANGLE_KEYS = ("b200", "b020", "b002", "b110", "b101", "b011")
QUAD_KEYS = tuple(f"p{i}{j}" for i in range(3) for j in range(3))

# coefficient of u^a in the quadratic Bernstein polynomial B_i, binomial included (rows a, columns i)
_BERNSTEIN_TO_MONOMIAL = ((1, 0, 0), (-2, 2, 0), (1, -2, 1))


def as_point(p) -> np.ndarray:
    """Return ``p`` as a read-only float array of shape (3,), rejecting NaN/inf."""
    arr = np.array(p, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3D point, got shape {np.shape(p)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"point has non-finite components: {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LinearForm:
    """``a*x + b*y + c*z + d`` in the query point ``(x, y, z)``."""

    a: float
    b: float
    c: float
    d: float

    def __call__(self, q) -> float:
        x, y, z = q
        return self.a * x + self.b * y + self.c * z + self.d

    def as_tuple(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0 and self.c == 0 and self.d == 0


@dataclass(frozen=True)
class DomainPoint:
    """Parameter pair on a patch domain.

    The constructor enforces the domain of ``kind``: the barycentric triangle
    ``u, v >= 0, u + v <= 1`` or the unit square.
    """

    u: float
    v: float
    kind: str = TRIANGLE

    def __post_init__(self):
        u, v = float(self.u), float(self.v)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        if not (np.isfinite(u) and np.isfinite(v)):
            raise DomainError(f"non-finite parameters ({u}, {v})")
        if self.kind == TRIANGLE:
            if u < 0 or v < 0 or u + v > 1:
                raise DomainError(f"({u}, {v}) is outside the barycentric triangle")
        elif self.kind == QUAD:
            if not (0 <= u <= 1 and 0 <= v <= 1):
                raise DomainError(f"({u}, {v}) is outside the unit square")
        else:
            raise ValueError(f"unknown patch kind {self.kind!r}")

    @property
    def w(self) -> float:
        return 1.0 - self.u - self.v


def _domain_point(d, kind: str) -> DomainPoint:
    if isinstance(d, DomainPoint):
        if d.kind != kind:
            raise DomainError(f"domain point of kind {d.kind!r} used on a {kind} net")
        return d
    u, v = d
    return DomainPoint(u, v, kind)


class _Net:
    kind: str

    def control_points(self) -> np.ndarray:
        raise NotImplementedError

    def diameter(self) -> float:
        """Largest distance between two control points."""
        pts = self.control_points()
        return max(float(np.linalg.norm(a - b)) for a, b in combinations(pts, 2))

    def translated(self, offset):
        offset = as_point(offset)
        return self.map_points(lambda p: p + offset)


@dataclass(frozen=True)
class TriangleNet(_Net):
    """Six control points of a quadratic Bezier triangle."""

    b200: np.ndarray
    b020: np.ndarray
    b002: np.ndarray
    b110: np.ndarray
    b101: np.ndarray
    b011: np.ndarray
    kind: str = field(default=TRIANGLE, init=False)

    def __post_init__(self):
        for key in TRIANGLE_KEYS:
            object.__setattr__(self, key, as_point(getattr(self, key)))

    @classmethod
    def from_dict(cls, points: dict) -> "TriangleNet":
        return cls(**{k: points[k] for k in TRIANGLE_KEYS})

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in TRIANGLE_KEYS}

    def control_points(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in TRIANGLE_KEYS])

    def anchors(self) -> tuple:
        return self.b200, self.b020, self.b002

    def map_points(self, fn) -> "TriangleNet":
        return TriangleNet(**{k: fn(getattr(self, k)) for k in TRIANGLE_KEYS})


@dataclass(frozen=True)
class QuadNet(_Net):
    """3x3 grid ``p[i][j]`` of a biquadratic patch; ``i`` pairs with ``u``, ``j`` with ``v``."""

    p: np.ndarray
    kind: str = field(default=QUAD, init=False)

    def __post_init__(self):
        arr = np.array(self.p, dtype=float)
        if arr.shape != (3, 3, 3):
            raise ValueError(f"quad net needs a 3x3 grid of 3D points, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("quad net has non-finite control points")
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    @classmethod
    def from_dict(cls, points: dict) -> "QuadNet":
        return cls([[points[f"p{i}{j}"] for j in range(3)] for i in range(3)])

    def to_dict(self) -> dict:
        return {f"p{i}{j}": self.p[i, j] for i in range(3) for j in range(3)}

    def control_points(self) -> np.ndarray:
        return self.p.reshape(9, 3)

    def anchors(self) -> tuple:
        return self.p[0, 0], self.p[0, 2], self.p[2, 0]

    def map_points(self, fn) -> "QuadNet":
        return QuadNet([[fn(self.p[i, j]) for j in range(3)] for i in range(3)])


def eval_triangle(net: TriangleNet, d) -> np.ndarray:
    """Evaluate a Bezier triangle at barycentric ``d = (u, v)``.

    Raises
    ------
    DomainError
        If ``(u, v)`` lies outside the triangle.
    """
    d = _domain_point(d, TRIANGLE)
    u, v, w = d.u, d.v, d.w
    return (net.b200 * (u * u) + net.b020 * (v * v) + net.b002 * (w * w)
            + net.b110 * (2 * u * v) + net.b101 * (2 * u * w) + net.b011 * (2 * v * w))


def _bernstein2(t: float) -> np.ndarray:
    s = 1.0 - t
    return np.array([s * s, 2.0 * t * s, t * t])


def eval_quad(net: QuadNet, d) -> np.ndarray:
    """Evaluate a biquadratic patch at ``d = (u, v)`` in the unit square."""
    d = _domain_point(d, QUAD)
    bu, bv = _bernstein2(d.u), _bernstein2(d.v)
    return np.einsum("i,j,ijk->k", bu, bv, net.p)


def evaluate(net, d) -> np.ndarray:
    """Dispatch to :func:`eval_triangle` or :func:`eval_quad`."""
    if net.kind == TRIANGLE:
        return eval_triangle(net, d)
    return eval_quad(net, d)


def _coerce(arr, exact: bool):
    if exact:
        return np.array([[Fraction(float(c)) for c in row] for row in np.atleast_2d(arr)],
                        dtype=object).reshape(np.shape(arr))
    return np.asarray(arr, dtype=float)


def monomial_coefficients(net, exact: bool = False) -> dict:
    """Monomial form of the parametric map: ``{(i, j): C_ij}`` with ``P = sum C_ij u^i v^j``.

    With ``exact=True`` the coefficients are ``Fraction`` arrays (float inputs
    convert exactly).
    """
    if net.kind == TRIANGLE:
        b = {k: _coerce(getattr(net, k), exact) for k in TRIANGLE_KEYS}
        return {
            (0, 0): b["b002"],
            (1, 0): 2 * b["b101"] - 2 * b["b002"],
            (0, 1): 2 * b["b011"] - 2 * b["b002"],
            (2, 0): b["b200"] + b["b002"] - 2 * b["b101"],
            (0, 2): b["b020"] + b["b002"] - 2 * b["b011"],
            (1, 1): 2 * b["b002"] + 2 * b["b110"] - 2 * b["b101"] - 2 * b["b011"],
        }
    p = _coerce(net.p.reshape(9, 3), exact).reshape(3, 3, 3)
    m = _BERNSTEIN_TO_MONOMIAL
    out = {}
    for a in range(3):
        for b in range(3):
            acc = 0
            for i in range(3):
                for j in range(3):
                    w = m[a][i] * m[b][j]
                    if w:
                        acc = acc + w * p[i, j]
            out[(a, b)] = acc
    return out


def surface_point(coeffs: dict, u: float, v: float) -> np.ndarray:
    """Evaluate the monomial form at any ``(u, v)``, inside the domain or not."""
    return sum(c * (u ** i * v ** j) for (i, j), c in coeffs.items())


def surface_jacobian(coeffs: dict, u: float, v: float) -> np.ndarray:
    """3x2 matrix ``[dP/du, dP/dv]`` of the monomial form."""
    du = np.zeros(3)
    dv = np.zeros(3)
    for (i, j), c in coeffs.items():
        if i:
            du = du + c * (i * u ** (i - 1) * v ** j)
        if j:
            dv = dv + c * (j * u ** i * v ** (j - 1))
    return np.column_stack([du, dv])


@dataclass(frozen=True)
class ResidualSystem:
    """``f_k(u, v) = P_k(u, v) - q_k`` for ``k`` in x, y, z.

    ``polys[k]`` maps a ``(u, v)`` exponent pair to the coefficient of that
    monomial, stored as a length-4 array ``(A, B, C, D)`` of a linear form in
    the query point.
    """

    kind: str
    polys: tuple

    def coefficient(self, k: int, i: int, j: int) -> LinearForm:
        c = self.polys[k].get((i, j))
        if c is None:
            return LinearForm(0.0, 0.0, 0.0, 0.0)
        return LinearForm(*c)

    def evaluate(self, u: float, v: float, q) -> np.ndarray:
        qh = np.append(np.asarray(q, dtype=float), 1.0)
        return np.array([sum(float(np.dot(c, qh)) * u ** i * v ** j for (i, j), c in poly.items())
                         for poly in self.polys])


def residual_system(net, exact: bool = False) -> ResidualSystem:
    """Build the three residual polynomials of a net in monomial form."""
    coeffs = monomial_coefficients(net, exact)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    polys = []
    for k in range(3):
        poly = {}
        for ij, c in coeffs.items():
            form = np.array([zero, zero, zero, c[k]], dtype=object if exact else float)
            if ij == (0, 0):
                form[k] = -one
            poly[ij] = form
        polys.append(poly)
    return ResidualSystem(net.kind, tuple(polys))


def bulged_triangle(bulge: float = 0.65) -> TriangleNet:
    """Unit-simplex corners with edge control points pushed outward to ``bulge``."""
    return TriangleNet.from_dict({
        "b200": (1, 0, 0), "b020": (0, 1, 0), "b002": (0, 0, 1),
        "b110": (bulge, bulge, 0), "b101": (bulge, 0, bulge), "b011": (0, bulge, bulge),
    })
