"""Exception types raised across the package."""


class TripnormError(Exception):
    """Base class for all package errors."""


class MalformedFileError(TripnormError):
    def __init__(self, path, line, message):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


class DegeneratePatchError(TripnormError):
    """A patch has too few points or a collinear covariance to be aligned."""


class ShapeMismatchError(TripnormError):
    pass


class CorruptFileError(TripnormError):
    pass


class ConfigHashError(TripnormError):
    """A checkpoint was written under a different training configuration."""


class NumericError(TripnormError):
    """Non-finite losses/gradients or an output too small to normalize."""
