"""Exception types raised across the package."""


class RspcapError(Exception):
    """Base class for all package errors."""


class DomainError(RspcapError, ValueError):
    """An argument is outside the operation's domain (bad index, wrong dimension, ...)."""


class ValidationError(RspcapError, ValueError):
    """A constructed or loaded object violates its invariants."""


class InconsistentTomographyError(RspcapError):
    """Basis outputs cannot be assembled into a Hermitian process matrix."""


class ZeroProbabilityBranchError(RspcapError):
    """A conditional state was requested on a branch of (near-)zero probability."""


class IncompleteDataError(RspcapError):
    """Tomography counts are missing a required measurement setting."""


class UnsupportedComparisonError(RspcapError):
    """Process fidelity requested between two mixed processes."""


class ModelInconsistencyError(RspcapError):
    """A classical model produced a non-PSD process matrix."""


class SolverError(RspcapError):
    """An SDP solve failed (infeasible, unbounded, or numerical breakdown)."""
