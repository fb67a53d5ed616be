"""Shared exception types.

The CLI maps these to exit codes: configuration problems exit with 2,
violated mathematical preconditions (critical level, degenerate point
configurations, truncation breaches) with 3.
"""


class ConfigError(ValueError):
    """Invalid run configuration (bad key, malformed value, invalid curve)."""


class NongenericConfigurationError(ValueError):
    """Marked points hit a degenerate constellation (b-point or w-point
    collision mod the lattice, coinciding points). Rejected, not regularized."""


class CriticalLevelError(ValueError):
    """level + kappa == 0; the rescaled Sugawara modes do not exist."""


class TruncationBreachError(RuntimeError):
    """A module action would leave the truncated basis. Raised instead of
    silently returning a wrong answer."""
