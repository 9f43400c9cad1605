"""Exception hierarchy shared by all nldiv modules."""


class NldivError(Exception):
    """Base class for library errors."""


class DomainError(NldivError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DimensionError(NldivError, ValueError):
    pass


class SingularityError(NldivError, ValueError):
    """Kernel evaluated on the diagonal x = z."""


class PreconditionError(NldivError, ValueError):
    pass


class DominationError(PreconditionError):
    """Data violate |f| <= Q a at some sample."""


class AssemblyError(NldivError, RuntimeError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class LineSearchError(NldivError, RuntimeError):
    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class ConvergenceError(NldivError, RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class ConfigError(NldivError, ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
