"""Numeric evaluation of the implicit function as a Cayley determinant."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dixon import CayleyMatrix, matrix_at
from .errors import DegenerateSurfaceError

ON_SURFACE = "on-surface"
SIDE_POSITIVE = "side-positive"
SIDE_NEGATIVE = "side-negative"

DEFAULT_REL_TOL = 1e-9


def lu_factor(a: np.ndarray):
    """LU factorization with partial pivoting.

    Returns ``(lu, perm, sign)`` where ``lu`` packs the unit-lower and upper
    factors, ``perm[k]`` is the original row placed at position ``k`` and
    ``sign`` is the permutation parity. Exactly singular columns are skipped,
    leaving a zero pivot.
    """
    lu = np.array(a, dtype=float)
    n = lu.shape[0]
    perm = np.arange(n)
    sign = 1.0
    for k in range(n - 1):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if lu[p, k] == 0.0:
            continue
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, sign


def det(a: np.ndarray) -> float:
    """Determinant through :func:`lu_factor`."""
    lu, _, sign = lu_factor(a)
    d = sign
    for x in np.diag(lu):
        d *= x
    return float(d)


def det_eval(cm: CayleyMatrix, q) -> float:
    """Signed Cayley determinant at ``q``.

    The sign depends on the frozen row/column orderings and is otherwise
    arbitrary; only sign comparisons between points carry meaning.
    """
    return det(matrix_at(cm, q))


def tolerance_scale(m: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """``rel_tol`` times the product of the row max-norms of ``m``."""
    scale = rel_tol
    for row in np.abs(m):
        scale *= float(row.max())
    return scale


@dataclass(frozen=True)
class ClassificationResult:
    value: float
    verdict: str
    tolerance_scale: float

    @property
    def on_surface(self) -> bool:
        return self.verdict == ON_SURFACE

    def to_dict(self) -> dict:
        return {"value": self.value, "verdict": self.verdict,
                "tolerance_scale": self.tolerance_scale}


def verdict_for(value: float, scale: float) -> str:
    if abs(value) <= scale:
        return ON_SURFACE
    return SIDE_POSITIVE if value > 0 else SIDE_NEGATIVE


def classify(cm: CayleyMatrix, q, rel_tol: float = DEFAULT_REL_TOL) -> ClassificationResult:
    """Classify ``q`` as on the implicit surface or on one of its sides.

    Side labels are orientation-arbitrary: two points with the same label are
    on the same side, nothing more.

    Raises
    ------
    DegenerateSurfaceError
        If the net's Dixon polynomial vanishes identically, so that the
        Cayley matrix at ``q`` is all zeros.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    if cm.degenerate:
        raise DegenerateSurfaceError("the Dixon polynomial of this net vanishes identically")
    m = matrix_at(cm, q)
    if not m.any():
        raise DegenerateSurfaceError("Cayley matrix is identically zero")
    scale = tolerance_scale(m, rel_tol)
    value = det(m)
    return ClassificationResult(value, verdict_for(value, scale), scale)
