"""Exception types shared by the compiled and pure-Python kernels."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class ConvergenceError(RuntimeError):
    """An iterative method exhausted its budget without converging."""


class UnsupportedConversionError(ValueError):
    """No boundary relation maps the source psi family onto the target."""


class UnsupportedStrategyError(ValueError):
    """A strategy lacks a property an operation relies on."""
