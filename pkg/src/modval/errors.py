"""Exception types shared across the package."""


class ModvalError(Exception):
    """Base class for all modval errors."""


class MissingSubset(ModvalError):
    """A required modality subset has no prediction entry."""


class TooManyModalities(ModvalError):
    """Exact valuation requested beyond the supported modality count."""


class DimensionMismatch(ModvalError):
    """Inputs disagree on the number of modalities."""


class EmptyDataset(ModvalError):
    """An operation needs at least one record or sample."""


class SingleModality(ModvalError):
    """Modality-level planning needs at least two modalities."""


class NonPositiveHyperparam(ModvalError):
    """A hyperparameter that must be strictly positive is not."""


class DegenerateGaps(ModvalError):
    """Gap-driven weighting is undefined because the gaps sum to zero."""


class InadmissibleTable(ModvalError):
    """A benefit table violates the preconditions of a bound check."""


class NonFiniteLoss(ModvalError):
    """Training produced a NaN or infinite loss."""


class UnsupportedModalityCount(ModvalError):
    """The requested mode only supports a specific modality count."""


class ParseError(ModvalError):
    """A prediction-log line could not be parsed.

    Carries the 1-based line number of the offending line.
    """

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class DuplicateSubsetKey(ParseError):
    """A log line repeats a subset key."""


class InconsistentModalityCount(ParseError):
    """A subset key references a modality index outside [0, n)."""
