"""Exception types raised by the transform modules."""


class NsgError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(NsgError, ValueError):
    pass


class NotAFrame(NsgError, ValueError):
    """The filterbank violates the painless condition or leaves a bin uncovered."""


class DesignFailure(NsgError, RuntimeError):
    pass


class LengthMismatch(NsgError, ValueError):
    pass


class ShapeMismatch(NsgError, ValueError):
    pass


class NonRealResult(NsgError, ValueError):
    """Synthesis of supposedly real coefficients produced a significant imaginary part."""


class OddCoefCount(NsgError, ValueError):
    pass


class RangeError(NsgError, ValueError):
    pass


class InvalidTarget(NsgError, ValueError):
    pass
