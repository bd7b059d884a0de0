"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or malformed config/input."""


class UsageError(RuntimeError):
    """API misuse, e.g. stepping an episode that already finished."""


class NumericalError(ArithmeticError):
    """Numerical invariant broken at runtime (non-finite loss, denormalized state)."""
