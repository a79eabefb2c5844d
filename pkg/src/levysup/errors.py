"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(RuntimeError):
    """An experiment or sampler configuration is infeasible or inconsistent."""
