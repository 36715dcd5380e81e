"""Exception hierarchy with a fixed exit-code map for the CLI.

0 ok, 2 config, 3 math-domain, 4 condition-failure, 5 cap, 6 solver.
"""


class RateCalcError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(RateCalcError):
    """Invalid configuration or malformed input data."""

    exit_code = 2


class MathDomainError(RateCalcError):
    """Evaluation outside the mathematical domain of an operation."""

    exit_code = 3


class FitError(MathDomainError):
    """Exponent fit impossible (too few samples, non-positive values)."""


class SingularityError(MathDomainError):
    """Spectral gap numerically zero (disconnected weight graph)."""


class DegenerateTransformError(MathDomainError):
    """A transform's kernel sequence vanished on its whole index window."""


class ConditionFailedError(RateCalcError):
    """An empirical side condition required by a transform fails."""

    exit_code = 4


class CapError(RateCalcError):
    """An index or grid cap was reached before the search finished."""

    exit_code = 5


class SolverError(RateCalcError):
    """The variational solver failed to produce a usable value."""

    exit_code = 6
