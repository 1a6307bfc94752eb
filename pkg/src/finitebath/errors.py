"""Exception and warning types raised across the package."""


class FiniteBathError(Exception):
    """Base class for every error raised by :mod:`finitebath`."""


# bath construction
class InvalidCount(FiniteBathError, ValueError):
    pass


class InvalidBandwidth(FiniteBathError, ValueError):
    pass


class InvalidInterval(FiniteBathError, ValueError):
    pass


class InvalidCoupling(FiniteBathError, ValueError):
    pass


class InvalidHamiltonian(FiniteBathError, ValueError):
    pass


class InvalidSeed(FiniteBathError, ValueError):
    pass


# eigensolvers
class PoleHit(FiniteBathError, ZeroDivisionError):
    pass


class DegeneratePoles(FiniteBathError, ValueError):
    pass


class SizeLimit(FiniteBathError, ValueError):
    pass


class ConvergenceError(FiniteBathError, RuntimeError):
    pass


# dynamics
class EmptyGrid(FiniteBathError, ValueError):
    pass


class DimensionMismatch(FiniteBathError, ValueError):
    pass


class DegenerateSpectrum(FiniteBathError, ValueError):
    pass


class IndexOutOfRange(FiniteBathError, IndexError):
    pass


class WindowEmpty(FiniteBathError, ValueError):
    pass


# fitting
class DegenerateInput(FiniteBathError, ValueError):
    pass


class NonPositiveRate(FiniteBathError, ValueError):
    pass


class NonPositiveSamples(FiniteBathError, ValueError):
    pass


class InsufficientData(FiniteBathError, ValueError):
    pass


class NonConvergence(RuntimeWarning):
    """Issued when an iterative fit stops before meeting its step tolerance.

    The best iterate is still returned, flagged with ``converged=False``.
    """


# configuration and output
class IoError(FiniteBathError, OSError):
    pass


class ParseError(FiniteBathError, ValueError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class ValidationError(FiniteBathError, ValueError):
    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")
