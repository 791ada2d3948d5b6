"""Exception types raised across the package."""

from __future__ import annotations


class DfigSmcError(Exception):
    """Base class for all package errors."""


class ValidationError(DfigSmcError):
    """A value violates a documented invariant; the message names it."""


class SingularLeakage(ValidationError):
    """Inductances give a non-positive leakage factor (Lm^2 >= Ls*Lr)."""


class ZeroFlux(ValidationError):
    """A flux reference of zero (or less) cannot define current set-points."""


class SingularCB(DfigSmcError):
    """The surface/input product C*B is singular (no control authority)."""


class SingularLyapunov(DfigSmcError):
    """The Lyapunov equation is singular (eigenvalue pair sums to zero)."""


class NonPositiveWeight(ValidationError):
    """A Lyapunov weight P_i must be strictly positive."""


class EmptyBank(ValidationError):
    """A sub-model bank must contain at least one model."""


class LengthMismatch(ValidationError):
    """Two sequences that must align have different lengths."""


class DimensionMismatch(ValidationError):
    """Matrix/vector shapes are incompatible with the operation."""


class NonFiniteState(DfigSmcError):
    """Integration produced a non-finite state component."""


class EmptyTrace(ValidationError):
    """An operation needs at least one recorded sample."""


class TooShortTrace(ValidationError):
    """An operation needs more recorded samples than the trace has."""


class ParseError(DfigSmcError):
    """Config text could not be parsed; carries a line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownKeyError(ParseError):
    """Config contains a key outside the schema."""
