"""Exception types shared across the package."""


class ClipfoldError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ClipfoldError):
    """Invalid configuration, dimensions or parameters (CLI exit code 2)."""


class StrategyError(ClipfoldError):
    """A pair strategy is incompatible with the requested signal set."""


class NumericError(ClipfoldError):
    """A numerical routine failed to converge to its stated tolerance."""


class DegenerateInputError(ClipfoldError):
    """An input is degenerate (zero vector, coincident pair, empty sum)."""
