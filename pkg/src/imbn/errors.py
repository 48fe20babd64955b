"""Exception types shared across the package."""


class IdxFormatError(ValueError):
    """Malformed IDX container."""


class BadMagicError(IdxFormatError):
    """Magic number does not match the expected container type."""


class TruncatedError(IdxFormatError):
    """Declared item count exceeds the available payload."""


class BadLabelError(IdxFormatError):
    """Label byte outside 0-9."""


class InsufficientDataError(ValueError):
    """A digit has fewer samples than the experiment requests."""


class EmptyClassError(ValueError):
    """A class has zero samples; inverse-frequency weights are undefined."""


class BatchTooSmallError(ValueError):
    """Batch has fewer than 2 rows; the unbiased variance needs |B| - 1 > 0."""


class DegenerateWeightMassError(ValueError):
    """Total batch weight Z <= 1; the weighted variance needs Z - 1 > 0."""


class StatsUnpopulatedError(RuntimeError):
    """Inference requested before normalization statistics were accumulated."""
