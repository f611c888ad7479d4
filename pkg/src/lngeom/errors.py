"""Exception hierarchy shared by every module."""


class LayerNormGeometryError(Exception):
    """Base class for all errors raised by lngeom."""


class ShapeError(LayerNormGeometryError, ValueError):
    """Operands have incompatible or malformed shapes."""


class InvalidDimensionError(ShapeError):
    """A dimension is below the supported minimum (N >= 2)."""


class NonFiniteError(LayerNormGeometryError, ValueError):
    """An input contains NaN or infinity."""


class DegenerateInputError(LayerNormGeometryError, ValueError):
    """An input lies on a degenerate set where the operation is undefined."""


class DegenerateGainError(DegenerateInputError):
    """The gain vector has zero entries where nonzero gains are required."""


class LayerNormDomainError(LayerNormGeometryError, ZeroDivisionError):
    """sigma^2 + epsilon vanishes, so the reference formula divides by zero."""


class ConvergenceError(LayerNormGeometryError, ArithmeticError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message: str, residual: float, sweeps: int):
        super().__init__(f"{message} (off-diagonal norm {residual:.3e} after {sweeps} sweeps)")
        self.residual = residual
        self.sweeps = sweeps


class ResolutionError(LayerNormGeometryError, RuntimeError):
    """A sampling oracle could not isolate the extrema it was asked for."""


class ConfigurationError(LayerNormGeometryError, ValueError):
    """Invalid user-supplied configuration (sampler tag, params file, CSV)."""
