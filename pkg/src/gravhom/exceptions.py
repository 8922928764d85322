"""Exception hierarchy shared across the library."""


class GravhomError(Exception):
    """Base class for all library errors."""

    category = "error"


class NoRealRoot(GravhomError):
    """Re-distorting a point failed: the radius quadratic has no real root."""

    category = "no-real-root"


class NormalizationFailure(GravhomError):
    """A homography cannot be scaled to h33 = 1."""

    category = "normalization-failure"


class ZeroTranslation(GravhomError):
    """Pure-rotation motion; the translation direction is undefined."""

    category = "zero-translation"


class DegenerateInput(GravhomError):
    """Polynomial input is numerically zero."""

    category = "degenerate-input"


class DegenerateConfiguration(GravhomError):
    """Point configuration does not constrain the model (e.g. coincident points)."""

    category = "degenerate-configuration"


class EliminationFailure(GravhomError):
    """Gauss-Jordan pivot too small; the sample is near-degenerate."""

    category = "elimination-failure"


class NoSolution(GravhomError):
    """A solver produced no geometrically admissible solution."""

    category = "no-solution"


class InsufficientData(GravhomError):
    """Too few correspondences for the requested minimal sample."""

    category = "insufficient-data"


class NoModelFound(GravhomError):
    """RANSAC exhausted its budget without a single scoreable hypothesis."""

    category = "no-model-found"


class GenerationFailure(GravhomError):
    """Synthetic scene generation could not satisfy visibility constraints."""

    category = "generation-failure"


class SchemaError(GravhomError):
    """A CSV/JSON artifact does not match its declared column schema."""

    category = "schema-error"


class ValidationError(GravhomError):
    """User-supplied input file failed validation."""

    category = "validation-error"
