"""Exception hierarchy shared by all radks modules."""


class RadksError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(RadksError):
    """Invalid parameters, config files, or precondition violations."""


class GridMismatchError(RadksError):
    """Fields from different grids were combined."""


class AdmissibilityError(RadksError):
    """Constructed initial data violates an admissibility condition."""


class ResolutionError(AdmissibilityError):
    """The mesh is too coarse to resolve a requested feature."""


class InsufficientDataError(RadksError):
    """A trajectory probe was given too few samples."""


class SnapshotFormatError(RadksError):
    """A snapshot or diagnostics file does not follow the expected format."""


class InternalError(RadksError):
    """A condition that should be unreachable for valid inputs."""
