"""Algorithms built on the implicit form: ray casting, point inversion and line scans."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as P

from .dixon import build_cayley_matrix
from .errors import ConsistencyError, DegenerateDirectionError, DegenerateSurfaceError, DomainError
from .expand import evaluate_poly, expand_resultant
from .geometry import QUAD, TRIANGLE, DomainPoint, as_point, evaluate, monomial_coefficients
from .normalize import direction_to_normalized, normalize_net, to_normalized
from .numeric import det_eval

DEFAULT_OFFSETS = (0.0, 1e4, 6.5e4, 1e6, 1e13)


@dataclass(frozen=True)
class Ray:
    """Ray ``origin + t * direction``; ``direction`` is normalized on construction."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        d = as_point(self.direction)
        length = float(np.linalg.norm(d))
        if length == 0.0:
            raise ValueError("ray direction must be nonzero")
        unit = d / length
        unit.setflags(write=False)
        object.__setattr__(self, "origin", as_point(self.origin))
        object.__setattr__(self, "direction", unit)

    def at(self, t):
        return self.origin + np.multiply.outer(t, self.direction)


class ImplicitPatch:
    """A net together with its implicit representation, built lazily.

    With ``normalize=True`` the Cayley matrix and polynomial are those of the
    normalized net and every query is mapped into that frame first.
    """

    def __init__(self, net, normalize: bool = False):
        self.net = net
        self.normalize = normalize
        if normalize:
            self.frame_net, self.transform = normalize_net(net)
        else:
            self.frame_net, self.transform = net, None

    @cached_property
    def cayley(self):
        return build_cayley_matrix(self.frame_net)

    @cached_property
    def poly(self):
        return expand_resultant(self.cayley)

    def to_frame(self, q) -> np.ndarray:
        return q if self.transform is None else to_normalized(self.transform, q)

    def direction_to_frame(self, v) -> np.ndarray:
        return v if self.transform is None else direction_to_normalized(self.transform, v)

    def implicit_value(self, q) -> float:
        return evaluate_poly(self.poly, self.to_frame(q))

    def det_value(self, q) -> float:
        return det_eval(self.cayley, self.to_frame(q))


# -- point inversion -------------------------------------------------------

@dataclass(frozen=True)
class Inversion:
    """Closest domain point found for a query and its distance to the surface."""

    u: float
    v: float
    kind: str
    residual: float
    on_patch: bool

    @property
    def domain_point(self) -> DomainPoint:
        return DomainPoint(self.u, self.v, self.kind)


def _project(kind: str, u: float, v: float) -> tuple:
    if kind == QUAD:
        return min(max(u, 0.0), 1.0), min(max(v, 0.0), 1.0)
    if u >= 0 and v >= 0 and u + v <= 1:
        return u, v
    best = None
    for a, b in (((0.0, 0.0), (1.0, 0.0)), ((0.0, 0.0), (0.0, 1.0)), ((1.0, 0.0), (0.0, 1.0))):
        e = (b[0] - a[0], b[1] - a[1])
        s = ((u - a[0]) * e[0] + (v - a[1]) * e[1]) / (e[0] ** 2 + e[1] ** 2)
        s = min(max(s, 0.0), 1.0)
        cand = (a[0] + s * e[0], a[1] + s * e[1])
        dist = (cand[0] - u) ** 2 + (cand[1] - v) ** 2
        if best is None or dist < best[0]:
            best = (dist, cand)
    u, v = best[1]
    # keep u + v <= 1 exactly after rounding
    return u, min(v, 1.0 - u)


def _seed_grid(kind: str, n: int = 33) -> np.ndarray:
    """``(n, n, 2)`` parameter grid; triangle entries outside the domain are NaN."""
    g = np.linspace(0.0, 1.0, n)
    uv = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
    if kind == TRIANGLE:
        uv[uv.sum(axis=-1) > 1.0 + 1e-15] = np.nan
    return uv


def _seed_order(dist: np.ndarray) -> np.ndarray:
    """Flat grid indices: local minima of ``dist`` first (closest first), then the rest.

    Near a fold several basins lie close together in space; taking the nearest
    grid points alone can put every seed in the wrong one.
    """
    padded = np.pad(dist, 1, constant_values=np.inf)
    n0, n1 = dist.shape
    neighbours = [padded[1 + di:1 + di + n0, 1 + dj:1 + dj + n1]
                  for di in (-1, 0, 1) for dj in (-1, 0, 1) if di or dj]
    local = np.isfinite(dist) & (dist <= np.minimum.reduce(neighbours))
    flat, is_local = dist.ravel(), local.ravel()
    order = np.lexsort((flat, ~is_local))
    return order[np.isfinite(flat[order])]


class _Surface:
    """Monomial form flattened for fast scalar evaluation with derivatives."""

    def __init__(self, net):
        coeffs = monomial_coefficients(net)
        self.exps = list(coeffs)
        self.c = np.array([coeffs[e] for e in self.exps])
        self.kind = net.kind

    def points(self, uv: np.ndarray) -> np.ndarray:
        mono = np.column_stack([uv[:, 0] ** i * uv[:, 1] ** j for i, j in self.exps])
        return mono @ self.c

    def point_and_jacobian(self, u: float, v: float):
        pu = (1.0, u, u * u, u * u * u)
        pv = (1.0, v, v * v, v * v * v)
        m, mu, mv = [], [], []
        for i, j in self.exps:
            m.append(pu[i] * pv[j])
            mu.append(i * pu[i - 1] * pv[j] if i else 0.0)
            mv.append(j * pu[i] * pv[j - 1] if j else 0.0)
        basis = np.array([m, mu, mv]) @ self.c
        return basis[0], basis[1:].T


# domain edges as (normal, offset): feasible where normal . (u, v) <= offset
_EDGES = {
    QUAD: (((-1.0, 0.0), 0.0), ((0.0, -1.0), 0.0), ((1.0, 0.0), 1.0), ((0.0, 1.0), 1.0)),
    TRIANGLE: (((-1.0, 0.0), 0.0), ((0.0, -1.0), 0.0), ((1.0, 1.0), 1.0)),
}


def _steps(kind, u, v, jac, r, lam):
    """Candidate Levenberg-Marquardt steps, respecting edges the point already sits on.

    An unconstrained step that pushes through an active edge is replaced by a
    one-dimensional step along that edge (one candidate per blocking edge).
    """
    a11, a12, a22 = jac[:, 0] @ jac[:, 0], jac[:, 0] @ jac[:, 1], jac[:, 1] @ jac[:, 1]
    g1, g2 = jac[:, 0] @ r, jac[:, 1] @ r
    damp = lam * (a11 + a22) + 1e-300
    b11, b22 = a11 + damp, a22 + damp
    det = b11 * b22 - a12 * a12
    if det > 0:
        du, dv = (-g1 * b22 + g2 * a12) / det, (g1 * a12 - g2 * b11) / det
    else:
        du, dv = -g1, -g2
    blocked = [n for n, c in _EDGES[kind]
               if n[0] * u + n[1] * v >= c - 1e-15 and n[0] * du + n[1] * dv > 0]
    if not blocked:
        return [(du, dv)]
    out = []
    for nx, ny in blocked:
        tx, ty = -ny, nx
        jt = jac[:, 0] * tx + jac[:, 1] * ty
        a = float(jt @ jt)
        t = -float(jt @ r) / (a * (1.0 + lam) + 1e-300)
        out.append((t * tx, t * ty))
    return out


def _refine(surf: _Surface, q, u, v, max_iter=60):
    """Projected Levenberg-Marquardt on ``|P(u, v) - q|^2`` with an active-edge set."""
    p, jac = surf.point_and_jacobian(u, v)
    r = p - q
    cost = float(r @ r)
    lam = 1e-12
    for _ in range(max_iter):
        if cost == 0.0:
            break
        best = None
        for du, dv in _steps(surf.kind, u, v, jac, r, lam):
            nu, nv = _project(surf.kind, u + du, v + dv)
            # the domain has unit size, so this step is below parameter resolution
            if abs(nu - u) + abs(nv - v) <= 1e-14:
                continue
            p2, jac2 = surf.point_and_jacobian(nu, nv)
            r2 = p2 - q
            cost2 = float(r2 @ r2)
            if best is None or cost2 < best[0]:
                best = (cost2, nu, nv, r2, jac2)
        if best is None:
            break
        if best[0] < cost:
            converged = cost - best[0] <= 1e-13 * cost
            cost, u, v, r, jac = best
            lam = max(lam / 10.0, 1e-15)
            if converged:
                break
        else:
            lam *= 10.0
            if lam > 1e8:
                break
    return u, v, float(np.sqrt(cost))


def invert_point(net, q, rel_tol: float = 1e-6, n_seeds: int = 16) -> Inversion:
    """Closest point of the patch to ``q`` in parameter space.

    Seeds from a 33x33 parameter grid, refined by damped Gauss-Newton with
    projection onto the domain; up to ``n_seeds`` seeds are tried, local
    minima of the grid distance first, stopping early once one lands on the patch to rounding level.
    ``on_patch`` is set when the residual distance is at most ``rel_tol``
    patch diameters; otherwise the result still carries the best parameters
    and the distance found.
    """
    q = as_point(q)
    surf = _Surface(net)
    diameter = net.diameter()
    grid = _seed_grid(net.kind)
    seeds = grid.reshape(-1, 2)
    valid = ~np.isnan(seeds[:, 0])
    dist = np.full(len(seeds), np.inf)
    dist[valid] = np.linalg.norm(surf.points(seeds[valid]) - q, axis=1)
    best = None
    for idx in _seed_order(dist.reshape(grid.shape[:2]))[:n_seeds]:
        u, v, res = _refine(surf, q, *seeds[idx])
        if best is None or res < best[2]:
            best = (u, v, res)
        if res <= 1e-12 * diameter:
            break
    u, v, res = best
    return Inversion(float(u), float(v), net.kind, res, res <= rel_tol * diameter)


# -- root isolation ----------------------------------------------------------

def _bisect(f, a: float, b: float, fa: float, xtol: float) -> float:
    while b - a > xtol:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def isolate_roots(f, t0: float, t1: float, n_brackets: int = 256, xtol: float | None = None,
                  max_refine: int = 4, breakpoints=()) -> list:
    """Real roots of a continuous ``f`` on ``[t0, t1]`` by sign-change bracketing.

    ``f`` must accept arrays. The initial uniform grid is refined by
    splitting an interval in three wherever ``|f|`` changes by more than a
    factor of 10 between its ends. Every bracket is bisected to ``xtol``
    (default ``1e-12 * (t1 - t0)``). Extra ``breakpoints`` are added to the
    grid. Roots of even multiplicity without a sign change are not reported.
    """
    if not t0 < t1:
        raise ValueError("need t0 < t1")
    if xtol is None:
        xtol = 1e-12 * (t1 - t0)
    ts = np.linspace(t0, t1, n_brackets + 1)
    extra = [b for b in breakpoints if t0 < b < t1]
    if extra:
        ts = np.unique(np.concatenate([ts, extra]))
    vals = np.asarray(f(ts), dtype=float)
    for _ in range(max_refine):
        a, b = np.abs(vals[:-1]), np.abs(vals[1:])
        steep = (np.maximum(a, b) > 10.0 * np.minimum(a, b)) & (np.sign(vals[:-1]) == np.sign(vals[1:]))
        if not steep.any():
            break
        idx = np.nonzero(steep)[0]
        extra = np.concatenate([ts[idx] + (ts[idx + 1] - ts[idx]) / 3.0,
                                ts[idx] + 2.0 * (ts[idx + 1] - ts[idx]) / 3.0])
        ts = np.concatenate([ts, extra])
        vals = np.concatenate([vals, np.asarray(f(extra), dtype=float)])
        order = np.argsort(ts, kind="stable")
        ts, vals = ts[order], vals[order]

    def scalar(t):
        return float(f(np.array([t]))[0])

    roots = []
    for k in range(len(ts) - 1):
        fa, fb = vals[k], vals[k + 1]
        if fa == 0.0:
            roots.append(float(ts[k]))
        elif fb != 0.0 and (fa > 0) != (fb > 0):
            roots.append(_bisect(scalar, float(ts[k]), float(ts[k + 1]), float(fa), xtol))
    if vals[-1] == 0.0:
        roots.append(float(ts[-1]))
    return roots


# -- ray casting -------------------------------------------------------------

@dataclass(frozen=True)
class Hit:
    t: float
    point: np.ndarray
    domain_point: DomainPoint
    residual: float


def ray_polynomial(poly, origin, direction) -> np.ndarray:
    """Ascending coefficients in ``t`` of ``F(origin + t * direction)``."""
    deg = max(poly.degree, 0)
    powers = []
    for o, d in zip(origin, direction):
        table = [np.ones(1)]
        for _ in range(deg):
            table.append(np.convolve(table[-1], (float(o), float(d))))
        powers.append(table)
    px, py, pz = powers
    out = np.zeros(deg + 1)
    xy = {}
    for (i, j, k), c in poly.terms.items():
        if (i, j) not in xy:
            xy[i, j] = np.convolve(px[i], py[j])
        term = np.convolve(xy[i, j], pz[k])
        out[:len(term)] += c * term
    return out


def polynomial_roots(coef, t0: float, t1: float, n_brackets: int = 256) -> list:
    """Real roots of odd multiplicity of ``sum coef[k] t^k`` in ``[t0, t1]``.

    Roots of the derivative are found first, recursively, and added to the
    bracketing grid; between consecutive breakpoints the polynomial is then
    monotone, so two nearby roots cannot hide inside one grid cell.
    """
    coef = np.trim_zeros(np.asarray(coef, dtype=float), "b")
    if len(coef) < 2:
        return []
    critical = []
    if len(coef) > 2:
        critical = polynomial_roots(P.polyder(coef), t0, t1, n_brackets)
    return isolate_roots(lambda t: P.polyval(t, coef), t0, t1, n_brackets=n_brackets,
                         breakpoints=critical)


def _polish(f, root: float, lo: float, hi: float, xtol: float) -> float:
    """Re-bracket ``root`` on ``f`` inside ``[lo, hi]`` and bisect; keeps ``root`` if no bracket."""
    h = max(xtol, 1e-9 * (hi - lo))
    while True:
        a, b = max(root - h, lo), min(root + h, hi)
        fa, fb = f(a), f(b)
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        if (fa > 0) != (fb > 0):
            return _bisect(f, a, b, fa, xtol)
        if a == lo and b == hi:
            return root
        h *= 4.0


def ray_roots(patch: ImplicitPatch, ray: Ray, t_range, n_brackets: int = 256) -> list:
    """Algebraic hits: every sign change of the implicit polynomial along the ray.

    Roots are isolated on the restriction expanded about the middle of the
    range. Its monomial coefficients can cancel badly far from the expansion
    point, so each root is then polished on a fresh expansion about itself,
    where the constant term is a direct evaluation of the implicit polynomial.
    """
    t0, t1 = t_range
    if not t0 < t1:
        raise ValueError("need t0 < t1")
    origin = patch.to_frame(ray.origin)
    direction = patch.direction_to_frame(ray.direction)
    mid = 0.5 * (t0 + t1)
    coef = ray_polynomial(patch.poly, origin + mid * direction, direction)
    roots = [mid + s for s in polynomial_roots(coef, t0 - mid, t1 - mid, n_brackets)]

    xtol = 1e-12 * (t1 - t0)
    bounds = [t0] + [0.5 * (a + b) for a, b in zip(roots, roots[1:])] + [t1]
    out = []
    for k, r in enumerate(roots):
        local = ray_polynomial(patch.poly, origin + r * direction, direction)
        s = _polish(lambda s: float(P.polyval(s, local)), 0.0, bounds[k] - r, bounds[k + 1] - r, xtol)
        out.append(r + s)
    return out


def raycast(net, ray: Ray, t_range, normalize: bool = False, n_brackets: int = 256,
            rel_tol: float = 1e-6, patch: ImplicitPatch | None = None) -> list:
    """Intersections of a ray with the patch for ``t`` in ``t_range``.

    Roots of the implicit polynomial along the ray are isolated first; each
    is kept only if point inversion puts it within ``rel_tol`` patch
    diameters of the parametric patch, since the algebraic surface extends
    past the patch boundary.

    Raises
    ------
    DegenerateSurfaceError
        If the net's implicit equation vanishes identically.
    """
    if patch is None:
        patch = ImplicitPatch(net, normalize)
    hits = []
    for t in ray_roots(patch, ray, t_range, n_brackets):
        point = ray.at(t)
        inv = invert_point(net, point, rel_tol=rel_tol)
        if inv.on_patch:
            hits.append(Hit(t, point, inv.domain_point, inv.residual))
    return hits


# -- line scans and the precision study ---------------------------------------

@dataclass(frozen=True)
class ScanRecord:
    t: float
    implicit_value: float
    det_value: float


SCAN_HEADER = ("t", "implicit_value", "det_value")
STUDY_HEADER = ("offset", "mode", "crossing_found", "t_star", "error_flags")


def scan_direction(net, d0) -> tuple:
    """Surface point ``p`` at ``d0`` and the unit vector ``p / |p|``."""
    p = evaluate(net, d0)
    norm = float(np.linalg.norm(p))
    if norm == 0.0:
        raise DegenerateDirectionError("surface point is the origin; p/|p| is undefined")
    return p, p / norm


def scan_line_functions(net, d0, use_normalization: bool = False):
    """Evaluators ``t -> F(line(t))`` for the implicit polynomial and the determinant.

    In the normalized frame the line starts at the normalized patch's own
    point at ``d0``; by affine invariance of Bezier patches this is the image
    of ``p`` without rounding the large world coordinates.
    """
    p, unit = scan_direction(net, d0)
    patch = ImplicitPatch(net, use_normalization)
    if use_normalization:
        start = evaluate(patch.frame_net, d0)
        step = patch.direction_to_frame(unit)
    else:
        start, step = p, unit

    def line(t):
        return start + np.multiply.outer(t, step)

    def implicit(t):
        pts = line(np.asarray(t, dtype=float))
        return evaluate_poly(patch.poly, (pts[..., 0], pts[..., 1], pts[..., 2]))

    def determinant(t):
        pts = line(np.atleast_1d(np.asarray(t, dtype=float)))
        out = np.array([det_eval(patch.cayley, q) for q in pts.reshape(-1, 3)])
        return out.reshape(np.shape(t)) if np.ndim(t) else float(out[0])

    return implicit, determinant


def scan_line(net, d0, t_range=(-1.0, 1.0), n_samples: int = 201,
              use_normalization: bool = False) -> list:
    """Sample both evaluators along ``p + t * p/|p|`` at ``n_samples`` uniform ``t``."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    implicit, determinant = scan_line_functions(net, d0, use_normalization)
    ts = np.linspace(t_range[0], t_range[1], n_samples)
    iv = implicit(ts)
    dv = determinant(ts)
    return [ScanRecord(float(t), float(a), float(b)) for t, a, b in zip(ts, iv, dv)]


def sign_changes(ts, values) -> list:
    """Brackets ``(t_a, t_b)`` across which ``values`` change sign; exact zeros are skipped."""
    out = []
    prev = None
    for t, val in zip(ts, values):
        if val == 0 or not np.isfinite(val):
            continue
        if prev is not None and (prev[1] > 0) != (val > 0):
            out.append((prev[0], t))
        prev = (t, val)
    return out


@dataclass(frozen=True)
class CrossingResult:
    crossing_found: bool
    t_star: float
    error_flags: tuple


def detect_crossing(f, ts, values, t_tol: float = 1e-6) -> CrossingResult:
    """Look for a unique zero crossing near ``t = 0``.

    Failure flags: ``no_sign_change``, ``multiple_sign_changes`` and
    ``displaced`` (the bisected crossing is farther than ``t_tol`` from 0).
    """
    brackets = sign_changes(ts, values)
    if not brackets:
        return CrossingResult(False, float("nan"), ("no_sign_change",))
    if len(brackets) > 1:
        return CrossingResult(False, float("nan"), ("multiple_sign_changes",))
    a, b = brackets[0]
    fa = float(f(a))
    t_star = _bisect(lambda t: float(f(t)), float(a), float(b), fa, 1e-15) if fa != 0 else float(a)
    if abs(t_star) > t_tol:
        return CrossingResult(False, t_star, ("displaced",))
    return CrossingResult(True, t_star, ())


@dataclass
class StudyRow:
    offset: float
    mode: str
    crossing_found: bool
    t_star: float
    error_flags: tuple = field(default_factory=tuple)

    def as_csv_row(self) -> list:
        return [repr(float(self.offset)), self.mode, str(self.crossing_found).lower(),
                repr(float(self.t_star)), ";".join(self.error_flags) or "none"]


@dataclass
class StudyReport:
    rows: list

    def row(self, offset: float, mode: str) -> StudyRow:
        for r in self.rows:
            if r.offset == offset and r.mode == mode:
                return r
        raise KeyError((offset, mode))

    def failure_onset(self, mode: str):
        """Smallest offset at which ``mode`` fails, or ``None``."""
        failed = [r.offset for r in self.rows if r.mode == mode and not r.crossing_found]
        return min(failed) if failed else None

    def is_monotone(self, mode: str) -> bool:
        """Whether failures in ``mode`` persist at every larger offset."""
        rows = sorted((r for r in self.rows if r.mode == mode), key=lambda r: r.offset)
        seen_failure = False
        for r in rows:
            if seen_failure and r.crossing_found:
                return False
            seen_failure |= not r.crossing_found
        return True

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(STUDY_HEADER)
        for r in self.rows:
            w.writerow(r.as_csv_row())
        return buf.getvalue()


STUDY_MODES = ("implicit/raw", "determinant/raw", "implicit/normalized", "determinant/normalized")


def precision_study(base_net, offsets=DEFAULT_OFFSETS, d0=(0.33, 0.33), t_range=(-1.0, 1.0),
                    n_samples: int = 201, t_tol: float = 1e-6) -> StudyReport:
    """Zero-crossing detection along the scan line for offset copies of a net.

    Every control point is shifted by ``(m, m, m)`` for each offset ``m``;
    the scan point and direction are computed after shifting. Each offset
    yields one row per evaluator (implicit polynomial, determinant) and
    frame (raw, normalized).
    """
    if any(m < 0 for m in offsets):
        raise ValueError("offsets must be non-negative")
    ts = np.linspace(t_range[0], t_range[1], n_samples)
    rows = []
    for m in offsets:
        net = base_net.translated((m, m, m))
        for frame, flag in (("raw", False), ("normalized", True)):
            implicit, determinant = scan_line_functions(net, d0, flag)
            for name, f in (("implicit", implicit), ("determinant", determinant)):
                try:
                    res = detect_crossing(f, ts, f(ts), t_tol)
                except (DegenerateSurfaceError, ConsistencyError) as exc:
                    # rounding at large offsets can destroy the construction outright
                    flag_name = "degenerate_surface" if isinstance(exc, DegenerateSurfaceError) else "inconsistent"
                    res = CrossingResult(False, float("nan"), (flag_name,))
                rows.append(StudyRow(float(m), f"{name}/{frame}", res.crossing_found,
                                     res.t_star, res.error_flags))
    return StudyReport(rows)


def scan_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_HEADER)
    for r in records:
        w.writerow([repr(r.t), repr(r.implicit_value), repr(r.det_value)])
    return buf.getvalue()


def validate_domain(kind: str, u: float, v: float) -> bool:
    try:
        DomainPoint(u, v, kind)
    except DomainError:
        return False
    return True
