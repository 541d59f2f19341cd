"""Exception types shared across the package.

Every error raised on purpose by the library derives from :class:`BdemmError`,
so callers can catch one base class at the boundary (the CLI maps them to
exit codes).  Names track the failure they signal, not the module that
raises them: several are shared (e.g. ``DimensionMismatchError`` comes out of
weight arithmetic, Kalman steps and mixture collapses alike).
"""


class BdemmError(Exception):
    """Base class for all deliberate library errors."""


class AllZeroError(BdemmError):
    """Every entry of a weight or evidence vector is zero (or underflowed)."""


class NegativeEntryError(BdemmError):
    """A quantity that must be nonnegative has a negative entry."""


class DimensionMismatchError(BdemmError):
    """Array shapes are inconsistent with each other."""


class ConfigMismatchError(BdemmError):
    """A weight-transition config lacks, or disagrees with, a required parameter."""


class EmptyHistoryError(BdemmError):
    """A weight history with no rows was handed to an operator that needs one."""


class NonFiniteWeightError(BdemmError):
    """An importance weight came out NaN or +inf (target/proposal mismatch)."""


class SingularInnovationCovError(BdemmError):
    """The innovation covariance of a Kalman update is not invertible."""


class FactorizationFailureError(BdemmError):
    """Cholesky failed even at the maximum jitter level."""


class ZeroPrecisionError(BdemmError):
    """A product-of-experts fusion collapsed to zero total precision."""


class LengthMismatchError(BdemmError):
    """Two sequences that must be aligned have different lengths."""


class ParseError(BdemmError):
    """A config or CSV file failed to parse; carries the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class ConfigError(BdemmError):
    """A config file is syntactically fine but names a bad or missing key."""
