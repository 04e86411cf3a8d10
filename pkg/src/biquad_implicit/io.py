"""JSON documents for nets, Cayley matrices, polynomials and transforms.

Floats are written with Python's shortest round-trip repr (at most 17
significant digits) and keys in a fixed order, so equal inputs give
byte-identical files.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .dixon import CayleyMatrix
from .errors import MalformedInputError
from .expand import TrivariatePoly
from .geometry import QUAD, QUAD_KEYS, TRIANGLE, TRIANGLE_KEYS, QuadNet, TriangleNet
from .normalize import NormalizationTransform

NET_KEYS = {TRIANGLE: TRIANGLE_KEYS, QUAD: QUAD_KEYS}


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"invalid JSON: {exc}") from None


def _exact_keys(doc, expected, what: str):
    if not isinstance(doc, dict):
        raise MalformedInputError(f"{what} must be a JSON object")
    keys = set(doc)
    if keys != set(expected):
        missing = sorted(set(expected) - keys)
        unknown = sorted(keys - set(expected))
        raise MalformedInputError(f"{what}: missing keys {missing}, unknown keys {unknown}")


def _number(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise MalformedInputError(f"{what} must be a finite number, got {x!r}")
    return float(x)


def parse_vector(x, size: int, what: str) -> list:
    if not isinstance(x, list) or len(x) != size:
        raise MalformedInputError(f"{what} must be an array of {size} numbers")
    return [_number(v, what) for v in x]


def net_from_json_dict(doc):
    _exact_keys(doc, ("kind", "points"), "net")
    kind = doc["kind"]
    if kind not in NET_KEYS:
        raise MalformedInputError(f"net kind must be 'triangle' or 'quad', got {kind!r}")
    _exact_keys(doc["points"], NET_KEYS[kind], f"{kind} points")
    points = {k: parse_vector(doc["points"][k], 3, k) for k in NET_KEYS[kind]}
    return (TriangleNet if kind == TRIANGLE else QuadNet).from_dict(points)


def net_to_json_dict(net) -> dict:
    pts = net.to_dict()
    return {"kind": net.kind, "points": {k: [float(c) for c in pts[k]] for k in NET_KEYS[net.kind]}}


def read_net(path) -> "TriangleNet | QuadNet":
    with open(path, encoding="utf-8") as fh:
        return net_from_json_dict(loads(fh.read()))


def cayley_to_json_dict(cm: CayleyMatrix) -> dict:
    return {"n": cm.n,
            "rows": [list(m) for m in cm.rows],
            "cols": [list(m) for m in cm.cols],
            "entries": [[[float(c) for c in cm.coeffs[i, j]] for j in range(cm.n)]
                        for i in range(cm.n)]}


def cayley_from_json_dict(doc: dict, kind: str) -> CayleyMatrix:
    _exact_keys(doc, ("n", "rows", "cols", "entries"), "cayley matrix")
    n = doc["n"]
    rows = tuple(tuple(m) for m in doc["rows"])
    cols = tuple(tuple(m) for m in doc["cols"])
    if len(rows) != n or len(cols) != n:
        raise MalformedInputError("cayley matrix basis sizes do not match n")
    entries = doc["entries"]
    if not isinstance(entries, list) or len(entries) != n:
        raise MalformedInputError("cayley matrix entries must be n x n")
    coeffs = np.array([[parse_vector(c, 4, "entry") for c in row] for row in entries])
    if coeffs.shape != (n, n, 4):
        raise MalformedInputError("cayley matrix entries must be n x n")
    coeffs.setflags(write=False)
    return CayleyMatrix(kind, rows, cols, coeffs)


def poly_from_json(text: str) -> TrivariatePoly:
    doc = loads(text)
    try:
        return TrivariatePoly.from_json_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInputError(f"polynomial document: {exc}") from None


def transform_from_json(text: str) -> NormalizationTransform:
    doc = loads(text)
    _exact_keys(doc, ("R1", "R2", "c1", "s"), "transform")
    return NormalizationTransform.from_json_dict(
        {"R1": parse_vector(doc["R1"], 9, "R1"), "R2": parse_vector(doc["R2"], 9, "R2"),
         "c1": parse_vector(doc["c1"], 3, "c1"), "s": _number(doc["s"], "s")})
