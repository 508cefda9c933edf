"""Exception hierarchy.

``InputError`` subclasses describe bad arguments or files; the rest are
numerical failures.  The CLI maps the two families to different exit codes.
"""


class WaxmanError(Exception):
    """Base class for every error raised by this package."""


class InputError(WaxmanError, ValueError):
    pass


class NumericalError(WaxmanError, ArithmeticError):
    pass


class DimensionMismatch(InputError):
    pass


class InvalidDelta(InputError):
    pass


class ZeroVector(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DimensionError(InputError):
    pass


class SingularFactorization(NumericalError):
    pass


class SingularResolvent(NumericalError):
    """``T - eps I`` is numerically singular: eps sits on an eigenvalue of T."""


class DegenerateDenominator(NumericalError):
    """``<r|G V u>`` vanished relative to ``||G V u||``."""


class BracketFailure(NumericalError):
    pass


class SecantStall(NumericalError):
    pass


class NoBracket(NumericalError):
    """The magnitude scan never brought |lambda| across the target."""


class DefectivePair(NumericalError):
    pass


class DeflationBreakdown(NumericalError):
    pass


class NewtonStall(NumericalError):
    pass


class ZeroDerivative(NumericalError):
    pass


class IncompleteSpectrum(UserWarning):
    """Fewer distinct roots than the matrix dimension were located."""


class IoError(InputError, OSError):
    """A matrix, report or config file could not be written or read."""
