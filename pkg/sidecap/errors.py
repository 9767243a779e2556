"""Exception hierarchy for sidecap.

Library code raises these; only the command-line entry point turns them into
exit codes.
"""


class SidecapError(ValueError):
    """Base class for every error raised by the toolkit"""


class NonPositiveVariance(SidecapError):
    """A power or variance parameter is zero or negative"""


class CorrelationOutOfRange(SidecapError):
    """A correlation coefficient lies outside [-1, 1]"""


class LabelError(SidecapError):
    """Unknown, duplicated or overlapping variable labels"""


class SingularCovariance(SidecapError):
    """Covariance determinant is not strictly positive within tolerance"""


class DegenerateChannel(SidecapError):
    """Operation needs |rho| < 1 but the channel has a perfect correlation"""


class IndeterminateCapacity(SidecapError):
    """Both correlations are +-1; the capacity formula is a 0/0 limit"""


class InvalidBracket(SidecapError):
    """Search interval with lo >= hi"""


class NonFiniteValue(SidecapError):
    """Objective returned NaN or infinity inside the search interval"""


class NotPositiveDefinite(SidecapError):
    """Cholesky factorization failed"""


class SingularEmpiricalCovariance(SidecapError):
    """Sample covariance is singular; retry with another seed"""


class SweepPointError(SidecapError):
    """Grid value that could not be turned into a valid channel"""

    def __init__(self, parameter: str, value: float, cause: Exception):
        self.parameter = parameter
        self.value = value
        self.cause = cause
        super().__init__(f"{parameter}={value}: {cause}")
