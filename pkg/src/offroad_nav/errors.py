"""Exception types raised across the mapping and planning stack."""


class NavError(Exception):
    pass


class InvalidInputError(NavError, ValueError):
    """Non-finite coordinates or otherwise malformed numeric input."""


class ConfigError(NavError, ValueError):
    """A parameter set or scenario file failed validation."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.message = message
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class RoiOverrunError(NavError):
    """The vehicle moved farther in one update than the ROI margin allows."""


class SpecMismatchError(NavError, ValueError):
    pass


class EmptyBufferError(NavError):
    pass


class NoPathError(NavError):
    pass


class MapFullError(NavError):
    """No traversable cell exists to place a goal on."""
