"""Exceptions shared across the package."""


class ConfigError(ValueError):
    """A scenario file or command line is malformed or incomplete."""


class NumericalError(RuntimeError):
    """A computation failed numerically (vanishing norm, non-convergence)."""
