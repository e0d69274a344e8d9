"""Exception types raised by the simulation layers."""


class VibronicError(Exception):
    """Base class for all package errors."""


class DimensionError(VibronicError, ValueError):
    """Operands live on incompatible Hilbert spaces."""


class AmplitudeTooLargeError(VibronicError, ValueError):
    """Requested coherent amplitude does not fit inside the Fock cutoff."""


class SingularSystemError(VibronicError, RuntimeError):
    """The constrained steady-state linear system could not be solved."""


class ConvergenceError(VibronicError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StepSizeError(VibronicError, RuntimeError):
    """Adaptive time integration failed (step-size underflow)."""


class NormUnderflowError(VibronicError, RuntimeError):
    """Trajectory norm decayed too far inside a single step."""


class HistogramError(VibronicError, ValueError):
    """Histogram requested on empty or inconsistent trajectory records."""
