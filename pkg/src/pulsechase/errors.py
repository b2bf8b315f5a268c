"""Exception hierarchy shared by the library and the command line."""


class PulseChaseError(Exception):
    """Base class for all library errors."""


class DomainError(PulseChaseError, ValueError):
    """An argument lies outside the domain of an operation."""


class GeometryError(PulseChaseError):
    """The requested geometry is invalid (for example an oval that splits in two)."""


class PreconditionError(GeometryError):
    """A geometric precondition of an operation does not hold."""


class InconsistentGeometryError(GeometryError):
    """Vertex configuration that cannot arise from a pulse centred outside the eclipsing zone."""


class SplitCoverageError(GeometryError):
    """No single receiver panel has every vertex in its forward half-space."""


class ConfigError(PulseChaseError, ValueError):
    """Invalid scenario configuration."""
