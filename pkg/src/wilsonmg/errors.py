"""Exception types shared across the package."""


class GaugeFileError(ValueError):
    """Raised when a gauge configuration file is malformed or truncated."""


class SingularOperatorError(RuntimeError):
    """Raised when a factorization or solve meets a singular-to-tolerance matrix."""


class DivergenceError(RuntimeError):
    """Raised when an iterative solve grows its residual past the safety guard."""
