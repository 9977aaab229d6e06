"""Exception and warning types shared across the package."""


class ProbAttnError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(ProbAttnError, ValueError):
    """An array's shape does not match the model's dimensions."""


class NonUniformPrecision(ProbAttnError, ValueError):
    """An operation that requires equal precisions saw per-unit variation."""


class DegeneratePrecision(ProbAttnError, ValueError):
    """A precision of zero where a positive one is required."""


class AllZeroRow(ProbAttnError, FloatingPointError):
    """A responsibility row underflowed to all zeros."""


class NegativeMass(ProbAttnError, ValueError):
    """A prior update would produce negative probability mass."""


class OffsetOutOfRange(ProbAttnError, IndexError):
    """A relative position offset is not covered by the embedding table."""


class ShapeMismatch(ProbAttnError, ValueError):
    """Grid-shaped inputs disagree on their dimensions."""


class InvalidBBox(ProbAttnError, ValueError):
    """A bounding box falls outside the image or is empty."""


class OutOfBounds(ProbAttnError, ValueError):
    """A pixel coordinate falls outside the image."""


class AdaptationGuardWarning(UserWarning):
    """An online update was rejected for one or more units.

    Raised as a warning, not an error: the offending units keep their
    previous values and the returned model is always valid.
    """
