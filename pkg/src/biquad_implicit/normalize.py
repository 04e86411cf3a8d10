"""Similarity transform that puts a patch into a canonical pose.

Three anchor control points ``c1, c2, c3`` (``b200, b020, b002`` for a
triangle, ``p00, p02, p20`` for a quad) are mapped so that ``c1`` goes to the
origin, ``c2`` to ``(1, 0, 0)`` and ``c3`` into the plane ``z = 0``::

    g(q) = R1 q / s,    f(p) = R2 (g(p) - g(c1)),    s = |c1 - c2|

``R1`` turns the anchor-plane normal ``(c1 - c2) x (c3 - c2)`` onto ``+z`` and
``R2`` spins about ``z`` until ``g(c2) - g(c1)`` lies on ``+x``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAnchorError
from .geometry import QUAD, TriangleNet, QuadNet, as_point

COLLINEAR_RTOL = 1e-9


def _rotation_to_z(normal: np.ndarray) -> np.ndarray:
    """Minimal rotation taking the unit vector ``normal`` to ``(0, 0, 1)``."""
    nx, ny, nz = normal
    sin = float(np.hypot(nx, ny))
    if sin == 0.0:
        return np.eye(3) if nz > 0 else np.diag([1.0, -1.0, -1.0])
    # axis = normal x z / |normal x z| = (ny, -nx, 0) / sin
    k = np.array([ny, -nx, 0.0]) / sin
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    one_minus_cos = sin * sin / (1.0 + nz) if nz > 0 else 1.0 - nz
    return np.eye(3) + sin * kx + one_minus_cos * (kx @ kx)


def _rotation_about_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class NormalizationTransform:
    R1: np.ndarray
    R2: np.ndarray
    c1: np.ndarray
    s: float

    @classmethod
    def from_anchors(cls, c1, c2, c3) -> "NormalizationTransform":
        """Build the transform for anchors ``c1, c2, c3``.

        Raises
        ------
        DegenerateAnchorError
            If ``c1 == c2`` or the anchors are (nearly) collinear.
        """
        c1, c2, c3 = (as_point(c) for c in (c1, c2, c3))
        e12 = c1 - c2
        e32 = c3 - c2
        s = float(np.linalg.norm(e12))
        if s == 0.0:
            raise DegenerateAnchorError("first two anchors coincide")
        normal = np.cross(e12, e32)
        length = float(np.linalg.norm(normal))
        if length <= COLLINEAR_RTOL * s * float(np.linalg.norm(e32)):
            raise DegenerateAnchorError("anchors are collinear")
        r1 = _rotation_to_z(normal / length)
        d = r1 @ (c2 - c1)
        r2 = _rotation_about_z(-np.arctan2(d[1], d[0]))
        return cls(r1, r2, c1, s)

    @property
    def linear(self) -> np.ndarray:
        """``R2 R1 / s``, the linear part of the forward map."""
        return self.R2 @ self.R1 / self.s

    def to_json_dict(self) -> dict:
        return {"R1": [float(v) for v in self.R1.ravel()],
                "R2": [float(v) for v in self.R2.ravel()],
                "c1": [float(v) for v in self.c1],
                "s": self.s}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, doc: dict) -> "NormalizationTransform":
        return cls(np.reshape(doc["R1"], (3, 3)).astype(float),
                   np.reshape(doc["R2"], (3, 3)).astype(float),
                   as_point(doc["c1"]), float(doc["s"]))


def to_normalized(t: NormalizationTransform, q) -> np.ndarray:
    # the offset is removed before rotating; equal to R1 q/s - R1 c1/s but without cancellation
    return t.linear @ (np.asarray(q, dtype=float) - t.c1)


def from_normalized(t: NormalizationTransform, q) -> np.ndarray:
    return t.c1 + t.s * (t.R1.T @ (t.R2.T @ np.asarray(q, dtype=float)))


def direction_to_normalized(t: NormalizationTransform, v) -> np.ndarray:
    """Image of a displacement vector (no translation)."""
    return t.linear @ np.asarray(v, dtype=float)


def normalize_net(net):
    """Map ``net`` into the canonical pose; returns ``(normalized_net, transform)``.

    Anchor coordinates are snapped to their exact targets: ``c1 -> (0, 0, 0)``,
    ``c2 -> (1, 0, 0)`` and ``z = 0`` for ``c3``.
    """
    t = NormalizationTransform.from_anchors(*net.anchors())
    mapped = net.map_points(lambda p: to_normalized(t, p))
    a1, a2, a3 = mapped.anchors()
    a1 = np.zeros(3)
    a2 = np.array([1.0, 0.0, 0.0])
    a3 = np.array([a3[0], a3[1], 0.0])
    if net.kind == QUAD:
        p = np.array(mapped.p)
        p[0, 0], p[0, 2], p[2, 0] = a1, a2, a3
        return QuadNet(p), t
    points = mapped.to_dict()
    points.update(b200=a1, b020=a2, b002=a3)
    return TriangleNet.from_dict(points), t
