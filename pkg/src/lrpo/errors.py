"""Exception hierarchy shared by every module."""

from __future__ import annotations


class LrpoError(Exception):
    """Base class for all library errors."""


class RangeError(LrpoError, IndexError):
    pass


class NotFoundError(LrpoError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class BudgetError(LrpoError):
    pass


class ValidationError(LrpoError, ValueError):
    pass


class DomainError(LrpoError, ValueError):
    pass


class UsageError(LrpoError, ValueError):
    pass
