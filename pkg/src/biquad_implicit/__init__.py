"""Implicitization of biquadratic Bezier triangles and quads by the Dixon resultant."""
from .apps import ImplicitPatch, Ray, invert_point, precision_study, raycast, scan_line
from .dixon import CayleyMatrix, build_cayley_matrix, build_dixon_delta
from .errors import (ConsistencyError, DegenerateAnchorError, DegenerateDirectionError,
                     DegenerateSurfaceError, DomainError, MalformedInputError)
from .expand import StraightLineProgram, TrivariatePoly, emit_slp, evaluate_poly, expand_resultant
from .geometry import (DomainPoint, QuadNet, TriangleNet, eval_quad, eval_triangle, evaluate,
                       residual_system)
from .normalize import NormalizationTransform, from_normalized, normalize_net, to_normalized
from .numeric import classify, det_eval

__all__ = [
    "CayleyMatrix", "ConsistencyError", "DegenerateAnchorError", "DegenerateDirectionError",
    "DegenerateSurfaceError", "DomainError", "DomainPoint", "ImplicitPatch", "MalformedInputError",
    "NormalizationTransform", "QuadNet", "Ray", "StraightLineProgram", "TriangleNet",
    "TrivariatePoly", "build_cayley_matrix", "build_dixon_delta", "classify", "det_eval",
    "emit_slp", "eval_quad", "eval_triangle", "evaluate", "evaluate_poly", "expand_resultant",
    "from_normalized", "invert_point", "normalize_net", "precision_study", "raycast",
    "residual_system", "scan_line", "to_normalized",
]
