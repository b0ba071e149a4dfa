"""
Custom application-specific exceptions.
"""
from typing import List, Optional


class WsnError(Exception):
    """Base exception for the workbench."""
    pass


class ConfigError(WsnError):
    """Raised when an experiment config file cannot be parsed or validated."""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class MissingArtifactError(WsnError):
    """Raised when a required checkpoint or dataset file does not exist."""
    pass


class TopologyMismatchError(WsnError):
    """Raised when two network states do not describe the same node set."""
    pass


class InfeasibleSolutionError(WsnError):
    """Raised for clustering solutions that violate the assignment constraints."""
    pass


class EmptyNetworkError(WsnError):
    """Raised when an operation needs at least one alive node."""
    pass


class SolverLimitError(WsnError):
    """Raised when the brute-force oracle would enumerate too many subsets."""
    pass


class DimensionError(WsnError):
    """Raised for shape mismatches in the neural network engine."""
    pass


class NonFiniteLossError(WsnError):
    """Raised when a training step produces a NaN or infinite loss."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BackendError(WsnError):
    """Raised when the clustering backend fails during agent training."""
    pass


class SchemaError(WsnError):
    """Raised when an emitted file does not match its versioned schema."""
    pass
