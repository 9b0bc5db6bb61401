"""Exception types shared across the toolkit."""


class SmefdError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(SmefdError, ValueError):
    """Operands have inconsistent dimensions or an index is out of range."""


class BoundError(SmefdError, ValueError):
    """A bound vector violates its sign or ordering requirements."""


class EmptyPolytopeError(SmefdError, ValueError):
    """Operation requires a nonempty polytope or vertex set."""


class UnboundedPolytopeError(SmefdError, ValueError):
    """Operation requires a bounded polytope."""


class InfeasibleProblemError(SmefdError, ValueError):
    """Optimization over an empty feasible set was requested."""


class ConfigError(SmefdError, ValueError):
    """Scenario configuration failed validation."""


class SchemaError(SmefdError, ValueError):
    """A log file does not match the expected schema."""
