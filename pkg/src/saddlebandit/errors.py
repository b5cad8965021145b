"""Exception hierarchy shared by every module."""


class SaddleBanditError(Exception):
    """Base class for all library errors."""


class DimensionError(SaddleBanditError, ValueError):
    pass


class InvalidSetError(SaddleBanditError, ValueError):
    """Raised when a set descriptor is degenerate (no span, empty box, ...)."""


class UnsupportedError(SaddleBanditError, NotImplementedError):
    """The operation needs structure the set does not expose."""


class SolverError(SaddleBanditError, RuntimeError):
    """An iterative routine hit its cap or a numerically singular system."""


class CertificationError(SaddleBanditError):
    """A built object failed its a-posteriori certificate."""


class ProtocolError(SaddleBanditError, RuntimeError):
    """Referee/player call order violated."""


class InsufficientDataError(SaddleBanditError, ValueError):
    pass


class ConfigError(SaddleBanditError, ValueError):
    pass
