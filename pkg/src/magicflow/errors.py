"""Exception types raised across the package."""


class MagicFlowError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(MagicFlowError, ValueError):
    pass


class InvalidModulus(MagicFlowError, ValueError):
    pass


class InvalidState(MagicFlowError, ValueError):
    pass


class SizeCapExceeded(MagicFlowError, ValueError):
    """A dense operation would materialize an object above the size cap."""


class NonIsotropicError(MagicFlowError, ValueError):
    pass


class NotCliffordError(MagicFlowError, ValueError):
    pass


class NoNontrivialParams(MagicFlowError, ValueError):
    """No (s, t) with s^2 + t^2 = 1 mod d and s, t not in {0, 1} exists."""


class UnsupportedConfiguration(MagicFlowError, ValueError):
    pass


class UnvalidatedFastPath(MagicFlowError, RuntimeError):
    """The qubit char-domain convolution was used before its oracle check ran."""


class MeanStateError(MagicFlowError, ValueError):
    """Unit-modulus support of a characteristic function is not an isotropic group."""


class VerdictDisagreement(MagicFlowError, RuntimeError):
    """The three class characterizations disagree; always an implementation bug."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
