"""Exception hierarchy shared by every module.

Each class carries the CLI exit code it maps to: 2 for bad input data,
3 for numerical failures.
"""


class SpiralError(Exception):
    exit_code = 2


class DataError(SpiralError):
    exit_code = 2


class NumericalError(SpiralError):
    exit_code = 3


# pi_model
class InvalidModel(DataError):
    pass


class OpenSubstrateBranch(NumericalError):
    """Substrate branch carries no loss (C_ox == 0 or R_Si == 0); R_p is infinite."""


class DivergentAtDC(NumericalError):
    pass


class NoSignChange(NumericalError):
    pass


# network
class SingularConversion(NumericalError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class GridMismatch(DataError):
    pass


class ZeroRealPart(NumericalError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


# extraction
class InvalidGeometry(DataError):
    pass


class FillRatioOutOfRange(DataError):
    pass


class MissingCavityDepth(DataError):
    pass


# fitting
class Underdetermined(NumericalError):
    pass


class NonFiniteResidual(NumericalError):
    def __init__(self, message, params=None):
        super().__init__(message)
        self.params = params


# optimizer
class NoFeasiblePoint(NumericalError):
    pass


# io
class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NonAscendingFrequency(ParseError):
    pass


class WrongPortCount(ParseError):
    pass


class ConfigError(ParseError):
    pass


class InvalidTwoPort(DataError, ValueError):
    pass
