"""Exception hierarchy shared by every module."""


class InversionError(Exception):
    """Base class for all errors raised by mpinvert."""


class DimensionError(InversionError, ValueError):
    pass


class NumericalError(InversionError, ArithmeticError):
    pass


class ConfigError(InversionError, ValueError):
    pass


class PreconditionError(InversionError, ValueError):
    pass


class UnsupportedError(InversionError):
    pass


class SingularMatrixError(NumericalError):
    pass


class SingularJacobianError(SingularMatrixError):
    pass


class DegenerateSolveError(NumericalError):
    """The inner cubic-model minimization failed to reach a root."""


class DegenerateInputError(InversionError, ValueError):
    pass


class GeometryError(InversionError):
    """No mountain-pass barrier separates the two anchors."""


class StallError(InversionError):
    pass
