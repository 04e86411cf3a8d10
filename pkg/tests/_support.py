"""Shared generators and independent oracles for the test suite."""
from fractions import Fraction
from itertools import permutations

import numpy as np

from biquad_implicit.geometry import QUAD, TRIANGLE, QuadNet, TriangleNet


def random_triangle(rng, scale=1.0):
    return TriangleNet(*rng.uniform(-scale, scale, (6, 3)))


def random_quad(rng, scale=1.0):
    return QuadNet(rng.uniform(-scale, scale, (3, 3, 3)))


def random_net(rng, kind):
    return random_triangle(rng) if kind == TRIANGLE else random_quad(rng)


def random_uv(rng, kind):
    if kind == TRIANGLE:
        u, v, _ = rng.dirichlet((1.0, 1.0, 1.0))
        return float(u), float(v)
    u, v = rng.uniform(0.0, 1.0, 2)
    return float(u), float(v)


def box_queries(rng, net, n, margin=0.75):
    """Uniform points in the control-point bounding box grown by ``margin`` on each side."""
    pts = net.control_points()
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    center, half = (lo + hi) / 2, (hi - lo) * margin
    return rng.uniform(center - half, center + half, (n, 3))


# -- de Casteljau: evaluation by repeated linear interpolation ----------------

def casteljau_triangle(net, u, v):
    w = 1.0 - u - v
    b = net.to_dict()
    # one barycentric step reduces the six degree-2 points to three degree-1 points
    p100 = u * b["b200"] + v * b["b110"] + w * b["b101"]
    p010 = u * b["b110"] + v * b["b020"] + w * b["b011"]
    p001 = u * b["b101"] + v * b["b011"] + w * b["b002"]
    return u * p100 + v * p010 + w * p001


def casteljau_quad(net, u, v):
    def curve(p0, p1, p2, t):
        a, b = (1 - t) * p0 + t * p1, (1 - t) * p1 + t * p2
        return (1 - t) * a + t * b

    rows = [curve(*net.p[i], v) for i in range(3)]
    return curve(*rows, u)


def casteljau(net, u, v):
    return casteljau_triangle(net, u, v) if net.kind == TRIANGLE else casteljau_quad(net, u, v)


# -- dense sampling of the patch ------------------------------------------------

def dense_samples(net, n=201):
    g = np.linspace(0.0, 1.0, n)
    uu, vv = np.meshgrid(g, g, indexing="ij")
    u, v = uu.ravel(), vv.ravel()
    if net.kind == TRIANGLE:
        keep = u + v <= 1.0 + 1e-12
        u, v = u[keep], v[keep]
        w = np.clip(1.0 - u - v, 0.0, None)
        b = net.to_dict()
        cols = [u * u, v * v, w * w, 2 * u * v, 2 * u * w, 2 * v * w]
        keys = ("b200", "b020", "b002", "b110", "b101", "b011")
        return sum(c[:, None] * b[k] for c, k in zip(cols, keys))
    bu = np.stack([(1 - u) ** 2, 2 * u * (1 - u), u ** 2])
    bv = np.stack([(1 - v) ** 2, 2 * v * (1 - v), v ** 2])
    return np.einsum("in,jn,ijk->nk", bu, bv, net.p)


def distance_to_patch(net, q, samples=None):
    """Brute-force distance from ``q`` to a dense parametric sampling of the patch."""
    if samples is None:
        samples = dense_samples(net)
    return float(np.min(np.linalg.norm(samples - np.asarray(q), axis=1)))


def segment_distance_to_patch(net, origin, direction, t0, t1, samples=None):
    """Brute-force distance from the segment ``origin + t * direction`` to the patch samples."""
    if samples is None:
        samples = dense_samples(net)
    d = np.asarray(direction, dtype=float)
    rel = samples - np.asarray(origin, dtype=float)
    t = np.clip(rel @ d / (d @ d), t0, t1)
    return float(np.min(np.linalg.norm(rel - t[:, None] * d, axis=1)))


# -- determinant oracles --------------------------------------------------------

def cofactor_det(m):
    """Determinant by Laplace expansion along the first row (exact for Fractions)."""
    m = [list(r) for r in m]
    n = len(m)
    if n == 1:
        return m[0][0]
    total = 0
    for j in range(n):
        if m[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * cofactor_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def leibniz_det(m):
    """Determinant from the permutation sum; only for tiny matrices."""
    n = len(m)
    total = 0
    for perm in permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        prod = 1
        for i, p in enumerate(perm):
            prod = prod * m[i][p]
        total = total + sign * prod
    return total


def exact_point(q):
    return [Fraction(float(c)) for c in q]


# -- ray construction -------------------------------------------------------------

def random_unit(rng):
    d = rng.normal(size=3)
    return d / np.linalg.norm(d)


def out_of_domain_uv(rng, kind):
    """A parameter pair just outside the patch domain."""
    while True:
        u, v = rng.uniform(-0.6, 1.6, 2)
        inside = (u >= 0 and v >= 0 and u + v <= 1) if kind == TRIANGLE else (0 <= u <= 1 and 0 <= v <= 1)
        if not inside and min(u, v, 1 - u - v if kind == TRIANGLE else 1 - max(u, v)) < -0.15:
            return float(u), float(v)
