"""Exception hierarchy.

Every error carries an ``exit_code`` used by the CLI: 2 for bad input,
3 for size guards, 4 for numerical failures.
"""


class BRWError(Exception):
    exit_code = 4


class InvalidParameters(BRWError, ValueError):
    exit_code = 2


class NonMonic(InvalidParameters):
    pass


class ReduciblePolynomial(InvalidParameters):
    pass


class DegenerateRange(InvalidParameters):
    pass


class ResidualOutOfRange(InvalidParameters):
    pass


class QOutsideHull(InvalidParameters):
    pass


class DigitSetUnsupported(InvalidParameters):
    pass


class ExactModeUnavailable(InvalidParameters):
    pass


class DepthTooLarge(BRWError):
    exit_code = 3


class RootFindingFailure(BRWError):
    pass


class NonConvergent(BRWError):
    pass


class DegreeOverflow(BRWError):
    pass


class CoverFailed(BRWError):
    pass
