# src/core/exceptions.py
"""
Custom exception classes for the torus optimal transport lab.

This module defines a hierarchy of exceptions carrying a message and a
details dictionary, so diagnostics keep the numbers that triggered them.
"""

from typing import Optional, Dict, Any, Tuple, Type


class LabError(Exception):
    """Base exception class for all lab-related errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        """
        Initialize lab error.

        Args:
            message: Error message
            details: Additional error details
        """
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} | Details: {self.details}"
        return self.message


class ConfigurationError(LabError):
    """Raised when a settings value or a config file is invalid."""
    pass


class InvalidInputError(LabError):
    """Raised when an operation receives arguments outside its domain."""
    pass


class BoundsViolationError(InvalidInputError):
    """Raised when a density could leave the bounded class (f_min <= 0)."""
    pass


class UnsupportedDensityError(LabError):
    """Raised when an operation needs exact Fourier coefficients that are missing."""
    pass


class ResolutionError(LabError):
    """Raised when the kernel is under-resolved on the grid."""
    pass


class SolverError(LabError):
    """Base class for transport solver errors."""
    pass


class SolverResourceError(SolverError):
    """Raised when a problem exceeds the exact solver cap."""
    pass


class SamplingError(LabError):
    """Raised when rejection sampling hits its consecutive-rejection cap."""
    pass


class PersistenceError(LabError):
    """Raised when results cannot be written."""
    pass


class ExperimentError(LabError):
    """Raised when a replicate fails; carries the (n, replicate) coordinate."""

    def __init__(self, message: str, coordinate: Tuple[int, int],
                 details: Optional[Dict[str, Any]] = None):
        merged = {'n': coordinate[0], 'replicate': coordinate[1]}
        merged.update(details or {})
        super().__init__(message, merged)
        self.coordinate = coordinate


# Exception mapping for easy access
EXCEPTION_MAPPING: Dict[str, Type[LabError]] = {
    'configuration': ConfigurationError,
    'invalid_input': InvalidInputError,
    'bounds_violation': BoundsViolationError,
    'unsupported_density': UnsupportedDensityError,
    'resolution': ResolutionError,
    'solver': SolverError,
    'solver_resource': SolverResourceError,
    'sampling': SamplingError,
    'persistence': PersistenceError,
    'experiment': ExperimentError,
}


def get_exception_class(error_type: str) -> Type[LabError]:
    """
    Get exception class by type name.

    Args:
        error_type: Type of error

    Returns:
        Exception class, LabError when the name is unknown
    """
    return EXCEPTION_MAPPING.get(error_type.lower(), LabError)
