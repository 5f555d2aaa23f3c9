"""Exception hierarchy shared by all geomech modules."""


class GeomechError(Exception):
    """Base class for every error raised by geomech."""


class InvalidInputError(GeomechError, ValueError):
    """Arguments violate an operation's preconditions."""


class ConfigurationError(GeomechError, ValueError):
    """A system configuration names an unknown system or a bad parameter."""

    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter


class NumericalError(GeomechError, ArithmeticError):
    """Non-finite values or a singular matrix where a regular one is needed."""


class UnsupportedMethodError(GeomechError):
    """An integrator was asked to handle a system outside its domain."""


class ConvergenceError(GeomechError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message, residual=float("nan"), step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class ConjugatePointError(ConvergenceError):
    """The action Hessian is singular: the endpoints are conjugate."""


class ConfigParseError(GeomechError, ValueError):
    """A run configuration file could not be parsed."""

    def __init__(self, message, line=None, key=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key
