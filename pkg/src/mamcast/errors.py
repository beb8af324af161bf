class InvalidPlacementError(ValueError):
    """Placement indices are duplicated or outside the grid."""


class DimensionMismatchError(ValueError):
    pass


class ZeroChannelError(ValueError):
    pass


class SearchCapExceeded(RuntimeError):
    """Exhaustive enumeration would exceed the configured subset cap."""


class ConfigError(ValueError):
    pass


class NotLosError(ValueError):
    pass
