"""Exception hierarchy shared across the toolkit."""


class RblError(Exception):
    """Base class for all rblkit errors."""


class InvalidArgumentError(RblError, ValueError):
    """An argument violates a documented precondition."""


class DomainMismatchError(RblError):
    """A distance matrix was supplied in the wrong (plain vs. squared) domain."""


class DegenerateConfigurationError(RblError):
    """A geometric configuration admits no unique answer (e.g. gimbal lock)."""


class RankDeficiencyError(RblError):
    """A matrix that must be (numerically) invertible is rank deficient."""


class UnderDeterminedError(RblError):
    """Too few observed entries to complete a matrix at the requested rank."""


class DegenerateEmbeddingError(RblError):
    """The double-centered EDM does not support a usable embedding."""


class AmbiguousAlignmentError(RblError):
    """Source points are too degenerate to align without ambiguity."""


class InsufficientLinksError(RblError):
    """Fewer visible cross-body links than the estimator requires."""


class ConfigError(RblError):
    """A config or input file failed to parse or validate."""
