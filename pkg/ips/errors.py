"""
Exception hierarchy for the positioning system
"""


class PositioningError(Exception):
    """Base class for every error raised by the ips package"""


class ConfigurationError(PositioningError, ValueError):
    pass


class DomainError(PositioningError, ValueError):
    """Physically meaningless input, e.g. non-positive power"""


class ShapeError(PositioningError, ValueError):
    """Vector lengths or table widths that do not line up"""


class EmptyMapError(PositioningError):
    pass


class CapacityError(PositioningError):
    """More neighbours or folds requested than the data can provide"""


class OrderingError(PositioningError, ValueError):
    pass


class GeometryError(PositioningError, ValueError):
    pass


class StorageError(PositioningError, OSError):
    pass


class SchemaError(PositioningError, ValueError):
    pass


class ParseError(SchemaError):
    pass


class NullViolationError(SchemaError):
    pass


class ProtocolError(PositioningError, ValueError):
    pass


class SessionError(PositioningError):
    pass
