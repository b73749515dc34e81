"""Exception hierarchy shared by every solwave module."""


class SolwaveError(Exception):
    """Base class for all errors raised by solwave."""


class ParameterError(SolwaveError, ValueError):
    """A model parameter lies outside its admissible range."""


class ConfigurationError(SolwaveError, ValueError):
    """A grid, search or run configuration is unusable."""


class ModelEvaluationError(SolwaveError, ArithmeticError):
    """A nonlinearity returned a non-finite value."""


class ShapeError(SolwaveError, ValueError):
    """Array shapes do not match the grid or the model."""


class DomainError(SolwaveError, ValueError):
    """A functional was evaluated outside its domain of definition."""


class DegenerateComponentError(SolwaveError, ArithmeticError):
    """A component's L2 mass collapsed, forcing its frequency to blow up."""


class StabilityError(SolwaveError, ValueError):
    """A time step violates the explicit scheme's stability bound."""
