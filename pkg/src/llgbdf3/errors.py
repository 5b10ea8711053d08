"""Exception types raised by the solver and its front ends."""


class LLGError(Exception):
    """Base class for all errors raised by :mod:`llgbdf3`."""


class SolverDiverged(LLGError):
    """The Krylov iteration hit its cap or broke down before reaching tolerance."""

    def __init__(self, message, stats=None, step_index=None):
        super().__init__(message)
        self.stats = stats
        self.step_index = step_index


class DegenerateMagnitude(LLGError):
    """A cell of the intermediate magnetization is too short to normalize."""

    def __init__(self, message, min_norm=None, step_index=None):
        super().__init__(message)
        self.min_norm = min_norm
        self.step_index = step_index


class DimensionTooLarge(LLGError):
    """Refusing to assemble a dense matrix above the size guard."""


class NonPositiveError(LLGError):
    """An order fit received an error value that is zero or negative."""


class ConfigError(LLGError):
    """Base class for configuration problems (exit code 4)."""


class ParseError(ConfigError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class ValidationError(ConfigError):
    def __init__(self, message, key=None):
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key
