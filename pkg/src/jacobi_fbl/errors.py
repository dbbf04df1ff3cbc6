"""Exception hierarchy shared by every module of the package."""


class JacobiFBLError(Exception):
    """Base class for all package errors."""


class DimensionError(JacobiFBLError, ValueError):
    """Channel dimensions fall outside the analysed regime or shapes mismatch."""


class NumericalError(JacobiFBLError, ArithmeticError):
    """A computation left its numerically safe range."""


class DomainError(JacobiFBLError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class DegenerateError(JacobiFBLError, ValueError):
    """The requested limit diverges for these dimensions (e.g. N == M at high SNR)."""


class RegimeError(JacobiFBLError, ValueError):
    """The formula only holds in a narrower regime than the one requested."""


class ConfigError(JacobiFBLError, ValueError):
    """A sweep configuration is malformed or uses an unknown vocabulary entry."""


class SweepFailure(JacobiFBLError, RuntimeError):
    """More than the tolerated fraction of sweep grid points failed."""
