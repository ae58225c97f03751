"""Exception hierarchy shared by all segrescope modules."""


class SegrescopeError(Exception):
    """Base class for every error raised by this package."""


class NormalizationError(SegrescopeError, ValueError):
    pass


class FormatError(SegrescopeError, ValueError):
    """Malformed serialized state; the message names the offending location."""


class ShapeError(SegrescopeError, ValueError):
    pass


class DegenerateFactorError(SegrescopeError, ValueError):
    pass


class DomainError(SegrescopeError, ValueError):
    pass


class ResourceError(SegrescopeError, RuntimeError):
    """A desk-scale size guard refused the computation."""


class NotFilledError(SegrescopeError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class IsometryError(SegrescopeError, ValueError):
    pass


class RankError(SegrescopeError, ValueError):
    pass
