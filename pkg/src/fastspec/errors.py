"""Exception types shared across the package.

The CLI maps these onto process exit codes; see fastspec.cli.
"""


class FastspecError(Exception):
    """Base class for package errors."""


class FormatError(FastspecError):
    """Unsupported or malformed image file."""


class ArgumentError(FastspecError):
    """Invalid argument or argument combination (bad k, level out of range, ...)."""


class ConfigError(FastspecError):
    """Invalid configuration field; carries the field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class CapacityError(FastspecError):
    """Problem size exceeds a hard cap."""


class ConvergenceError(FastspecError):
    """Iterative solver ran out of iterations; carries the best residuals seen."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class IsolatedVertexError(FastspecError):
    """A graph vertex ended up with zero degree, which breaks the normalization."""

    def __init__(self, index: int, kind: str = "superpixel"):
        self.index = index
        self.kind = kind
        super().__init__(
            f"{kind} {index} has zero degree; it is isolated in the affinity graph "
            f"(raise r/R, adjust sigmas, or enable degree regularization)"
        )
