"""Exception types shared across the package."""


class SkqdError(Exception):
    """Base class for all package errors."""


class InvalidSizeError(SkqdError, ValueError):
    """System size outside the allowed range for a builder."""


class ShapeError(SkqdError, ValueError):
    """Operator and state dimensions do not match."""


class CapacityError(SkqdError, ValueError):
    """Requested exact treatment exceeds a configured size limit."""


class NormalizationError(SkqdError, ValueError):
    """State vector norm deviates too far from one."""


class ConvergenceError(SkqdError, RuntimeError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InvalidSectorError(SkqdError, ValueError):
    """Particle-number sector is empty or inconsistent."""


class InvalidParameterError(SkqdError, ValueError):
    """Scalar parameter outside its documented domain."""


class EmptySubspaceError(SkqdError, ValueError):
    """All overlap-matrix directions fell below the threshold."""


class InvalidBasisError(SkqdError, ValueError):
    """Subspace basis contains invalid or duplicate bitstrings."""


class DegenerateSpectrumError(SkqdError, ValueError):
    """Spectral width is zero, so no time step can be derived."""


class ConfigurationError(SkqdError, ValueError):
    """Experiment configuration is malformed or incomplete."""
