"""Exception types raised across the package."""


class NavError(Exception):
    """Base class for all estimation-library errors."""


class NotAntisymmetric(NavError, ValueError):
    pass


class NotRotation(NavError, ValueError):
    pass


class DegenerateMean(NavError, ArithmeticError):
    """Top eigenvalue of the quaternion scatter matrix is not unique."""


class NotPsd(NavError, ValueError):
    pass


class SingularInnovation(NavError, ArithmeticError):
    pass


class BadCovariance(NavError, ValueError):
    pass


class NonFiniteInput(NavError, ValueError):
    pass


class EmptyFeatureSet(NavError, ValueError):
    pass


class NonMonotoneTime(NavError, ValueError):
    pass


class IoError(NavError, OSError):
    pass


class ParseError(NavError, ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        if path is not None:
            where = f"{path}" if line is None else f"{path}:{line}"
        else:
            where = "" if line is None else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


class UnknownFeatureId(NavError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class MisalignedSeries(NavError, ValueError):
    pass
