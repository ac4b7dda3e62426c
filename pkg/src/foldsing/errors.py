"""Exception hierarchy.

`InputError` subclasses map to CLI exit code 2, `NumericError` subclasses to 3.
"""

from __future__ import annotations


class FoldsingError(Exception):
    pass


class InputError(FoldsingError, ValueError):
    pass


class NumericError(FoldsingError, ArithmeticError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, offset: int | None = None, source: str | None = None):
        self.offset = offset
        self.source = source
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class UndeclaredVariable(ParseError):
    pass


class JetDomainError(NumericError):
    pass


class NotDivisible(NumericError):
    def __init__(self, message: str, monomial: tuple[int, ...] | None = None):
        self.monomial = monomial
        super().__init__(message)


class NoFormalSolution(NumericError):
    pass


class NoConvergence(NumericError):
    pass


class NotOnSurface(InputError):
    pass


class SingularJacobian(NumericError):
    def __init__(self, message: str, point=None):
        self.point = point
        super().__init__(message)


class OutOfRange(InputError):
    pass


class NoHandle(NumericError):
    pass


class DegenerateH(NumericError):
    pass


class ProjectionFailure(NumericError):
    pass
