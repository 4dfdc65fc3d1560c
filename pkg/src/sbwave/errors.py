"""Exception types raised across the package."""


class SbwaveError(Exception):
    """Base class for every error raised by sbwave."""


class InvalidInterval(SbwaveError, ValueError):
    pass


class DivisionByZeroInterval(SbwaveError, ZeroDivisionError):
    pass


class DomainError(SbwaveError, ValueError):
    pass


class PointOutsideDomain(SbwaveError, ValueError):
    pass


class NonConvergence(SbwaveError, RuntimeError):
    pass


class NoConvergence(SbwaveError, RuntimeError):
    """Newton iteration stopped without meeting its tolerance."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class SingularGram(SbwaveError, ArithmeticError):
    pass


class SingularBlock(SbwaveError, ArithmeticError):
    pass


class EigSolverFailure(SbwaveError, ArithmeticError):
    pass


class InvalidSplit(SbwaveError, ValueError):
    pass


class RadicandNotPositive(SbwaveError, ArithmeticError):
    pass


class UnboundedInterval(SbwaveError, ArithmeticError):
    pass


class HypothesisFailed(SbwaveError, ArithmeticError):
    """An interval check required by the spectral enclosure did not verify."""

    def __init__(self, which, message=""):
        super().__init__(f"{which}: {message}" if message else which)
        self.which = which


class ConfigError(SbwaveError, ValueError):
    pass


class FileFormatError(SbwaveError, ValueError):
    pass
