"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An interval or point falls outside the grid's domain."""


class ResolutionError(ValueError):
    """The grid is too coarse to represent an interval exactly."""


class ConfigError(ValueError):
    """An operator/experiment configuration violates a stated invariant."""
