"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: parameter/domain errors -> 2,
numeric errors -> 3, resource errors -> 4.
"""


class HfsmError(Exception):
    """Base class for all package errors."""


class ParameterError(HfsmError, ValueError):
    """A parameter is outside its documented range or inconsistent."""


class DomainError(HfsmError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class NumericError(HfsmError, ArithmeticError):
    """A numerical procedure failed to converge or produced invalid values."""


class ResourceError(HfsmError, RuntimeError):
    """A computation would exceed a configured resource cap."""
