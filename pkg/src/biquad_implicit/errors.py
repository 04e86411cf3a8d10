"""Exception types raised by the package."""


class DomainError(ValueError):
    """A parameter pair lies outside the patch domain."""


class DegenerateSurfaceError(ValueError):
    """The implicit equation of a net vanishes identically."""


class DegenerateAnchorError(ValueError):
    """Normalization anchors are coincident or collinear."""


class DegenerateDirectionError(ValueError):
    """A scan direction cannot be formed (surface point at the origin)."""


class ConsistencyError(RuntimeError):
    """An internal arithmetic invariant failed. Always a bug."""


class MalformedInputError(ValueError):
    """A serialized document does not match its schema."""
