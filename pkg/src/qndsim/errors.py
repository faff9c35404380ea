"""Exception hierarchy shared by every qndsim module."""


class QNDError(Exception):
    """Base class for all qndsim errors."""


class DegenerateLabelingError(QNDError, ValueError):
    """Eigenstates cannot be matched one-to-one with product states."""


class DegenerateNullSpaceError(QNDError, ValueError):
    """A generator has more than one closed class, so no unique stationary state."""

    def __init__(self, message, blocks=()):
        super().__init__(message)
        self.blocks = tuple(tuple(b) for b in blocks)


class NumericalFailure(QNDError, ArithmeticError):
    """Propagation produced non-finite or non-conserving populations."""


class FitFailure(QNDError, RuntimeError):
    """Flip-rate fit did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(QNDError, ValueError):
    """Invalid run configuration; ``path`` names the offending key."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
