"""
Error types
Exceptions raised by the phase space kernels, the samplers and the CLI
"""
from typing import Optional


class SpectroError(Exception):
    """Base class for all library errors"""


class DimensionMismatchError(SpectroError, ValueError):
    """Raised when points, states or multi-indices disagree in dimension"""


class UnsupportedStateError(SpectroError, TypeError):
    """Raised when an operation has no implementation for a state variant"""


class HermiteOrderError(SpectroError, OverflowError):
    """Raised when a Hermite order exceeds the configured cap"""


class QuadratureError(SpectroError, RuntimeError):
    """Raised when a quadrature rule cannot be built or evaluated"""


class SamplerError(SpectroError, RuntimeError):
    """Raised when a Markov chain cannot be seeded or advanced"""


class GridError(SpectroError, ValueError):
    """Raised for malformed or oversized evaluation grids"""


class ConfigError(SpectroError, ValueError):
    """Raised for invalid run configurations"""


class ObservableDimensionError(SpectroError, ValueError):
    """Raised when an observable refers to a coordinate outside 1..d"""


class ObservableSyntaxError(SpectroError, ValueError):
    """
    Raised by the observable parser

    Args:
        message: Description of the problem
        position: Character offset in the source text
    """

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} at offset {position}"
        super().__init__(message)


class QuadratureAccuracyWarning(UserWarning):
    """Emitted when a Hermite window is large relative to the quadrature resolution"""
