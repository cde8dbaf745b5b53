"""Exception types shared across the package."""


class MacroQubitError(Exception):
    """Base class for all package errors."""


class InvalidArgument(MacroQubitError, ValueError):
    """A parameter is outside its documented domain."""


class SeriesDomainError(MacroQubitError, ValueError):
    """A series operation needs a constant term it does not have."""


class TruncationError(MacroQubitError):
    """The Fock-space cutoff is too small for the requested operation.

    ``mode`` names the offending mode and ``tail`` the offending weight.
    """

    def __init__(self, message, mode=None, tail=None):
        super().__init__(message)
        self.mode = mode
        self.tail = tail


class NumericError(MacroQubitError, ArithmeticError):
    """An integrator or solver failed its own convergence contract."""


class ContractViolation(MacroQubitError):
    """A computed quantity broke an invariant that must hold by construction."""
