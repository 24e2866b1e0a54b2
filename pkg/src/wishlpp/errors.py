"""Exception types shared across the package."""


class WishlppError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(WishlppError, ValueError):
    """A distribution or model parameter is outside its domain."""


class ValidationError(WishlppError, ValueError):
    """Input data violates a structural invariant (symmetry, ordering, interlacing)."""


class DegenerateStateError(ValidationError):
    """A kernel was evaluated at a state where its density is undefined."""


class SizeError(WishlppError, ValueError):
    """Instance too large for an exhaustive/enumerative computation."""


class ConfigError(WishlppError, ValueError):
    """Invalid experiment configuration."""


class NumericError(WishlppError, RuntimeError):
    """A numerical routine failed to converge or produced an invalid result."""
