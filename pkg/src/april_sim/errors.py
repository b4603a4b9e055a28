"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value; raised at construction time, never mid-run."""


class ContractViolation(RuntimeError):
    """An operation was called on an object in a state its contract forbids."""
