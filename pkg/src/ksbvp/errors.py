"""Shared exception and warning types.

Configuration problems (bad grids, inconsistent parameters, unsupported
index ranges) raise ConfigurationError; iteration blow-ups raise
DivergenceError.  Quadrature truncation and domain-decay problems are
soft failures reported through AccuracyWarning so a run can finish and
still flag its output.
"""

__all__ = [
    "ConfigurationError",
    "DivergenceError",
    "RootSelectionError",
    "RefinementNeededError",
    "IncompleteRecordError",
    "AccuracyWarning",
]


class ConfigurationError(ValueError):
    """Invalid or mutually inconsistent configuration values."""


class DivergenceError(RuntimeError):
    """A fixed-point iteration failed to contract."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class RootSelectionError(RuntimeError):
    """The characteristic quartic did not yield exactly two stable roots."""

    def __init__(self, message, roots=None):
        super().__init__(message)
        self.roots = roots


class RefinementNeededError(RuntimeError):
    """A root curve jumped by more than the local root spacing between nodes."""


class IncompleteRecordError(RuntimeError):
    """A norm or report was requested from a record missing required traces."""


class AccuracyWarning(UserWarning):
    """Result produced, but an internal error estimate exceeds its target."""
