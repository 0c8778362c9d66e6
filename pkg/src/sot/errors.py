"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class SotError(Exception):
    exit_code = 2

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class ParseError(SotError):
    exit_code = 1


class NumericalFailure(SotError, ArithmeticError):
    exit_code = 3


class IndexOutOfRange(SotError, IndexError):
    pass


class AlgebraMismatch(SotError, ValueError):
    pass


class EmptyList(SotError, ValueError):
    pass


class NotClassical(SotError, ValueError):
    pass


class SingularMarginal(SotError, ValueError):
    pass


class ChainMismatch(SotError, ValueError):
    pass


class ChainTooLong(SotError, ValueError):
    pass


class ShapeMismatch(SotError, ValueError):
    pass


class TooLarge(SotError, ValueError):
    pass


class NotInTStar(SotError, ValueError):
    pass


class NotQubitAlgebra(SotError, ValueError):
    pass


class NotSelfAdjoint(SotError, ValueError):
    pass
