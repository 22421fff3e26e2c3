"""Exception types raised across the package."""


class PlateError(Exception):
    """Base class for all package errors."""


class ArgumentError(PlateError, ValueError):
    pass


class CapacityError(PlateError):
    pass


class NotFoundError(PlateError, LookupError):
    pass


class DomainError(PlateError, ValueError):
    pass


class ElementQualityError(PlateError):
    pass


class ConstraintRankError(PlateError):
    def __init__(self, block_id, message):
        super().__init__(f"constraint block {block_id}: {message}")
        self.block_id = block_id


class SolverError(PlateError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class UnsupportedError(PlateError):
    pass
