"""Exception types shared across the toolkit.

The split matters for batch use: configuration problems and numeric
failures map to different process exit codes (see :mod:`rombox.cli`).
"""


class NumericsError(RuntimeError):
    """A numerical operation failed (non-convergence, degenerate mode, ...)."""


class ConfigError(ValueError):
    """A run configuration is missing, malformed, or inconsistent."""


class OracleError(RuntimeError):
    """A full-order-model evaluation failed; carries the offending parameter."""

    def __init__(self, message, mu=None):
        super().__init__(message)
        self.mu = mu
