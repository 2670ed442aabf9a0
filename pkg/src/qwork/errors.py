"""Exception hierarchy shared by all qwork modules."""


class QworkError(Exception):
    """Base class for every error raised by qwork."""


class NotHermitian(QworkError):
    pass


class NoConvergence(QworkError):
    pass


class DomainError(QworkError, ValueError):
    pass


class DimensionMismatch(QworkError, ValueError):
    pass


class TruncationTooSmall(QworkError):
    pass


class TruncationLeakage(QworkError):
    """Population reached the top of a truncated Fock space."""


class DegenerateSpectrum(QworkError):
    pass


class NonRealExpectation(QworkError):
    pass


class NonUnitary(QworkError):
    pass


class NegativeProbability(QworkError):
    pass


class NonFinite(QworkError):
    pass


class OrderTooHigh(QworkError, ValueError):
    pass


class AllTermsSkipped(QworkError):
    pass


class ConfigError(QworkError):
    pass
