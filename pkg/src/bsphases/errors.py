"""Exception hierarchy shared by all modules."""


class BSPhaseError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(BSPhaseError, ValueError):
    """Invalid user input: unknown family, malformed config, empty grids."""


class DomainError(BSPhaseError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(BSPhaseError, ArithmeticError):
    """A numerical procedure failed to meet its accuracy contract."""


class ConvergenceError(NumericalError):
    """Iteration or refinement cap reached before the tolerance was met.

    ``residual`` carries the best error estimate that was achieved.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegeneracyError(NumericalError):
    """A spectrum that must be simple is (numerically) degenerate."""


class TransversalityError(NumericalError):
    """Two eigenvalue branches meet tangentially."""


class UnsupportedConfigurationError(NumericalError):
    """Triple degeneracies or crossings too close to be treated separately."""


class WindowError(NumericalError):
    """The minimal gap of an avoided crossing is not inside its search window."""


class StructuralError(NumericalError):
    """A scattering graph or cycle skeleton is malformed."""
