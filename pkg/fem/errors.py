"""
Exception hierarchy for the finite element library.

Numerical failures (singular operators, rejected relaxation roots) derive from
FemError so pipelines can map them to a single exit code; argument errors also
derive from ValueError so plain callers can catch them the usual way.
"""


class FemError(Exception):
    """Base exception for all library errors."""
    pass


class DegreeError(FemError, ValueError):
    """Raised when a polynomial degree is invalid for the requested operation."""
    pass


class DomainError(FemError, ValueError):
    """Raised when an argument lies outside the domain of a function."""
    pass


class StructureError(FemError, ValueError):
    """Raised when a matrix does not have the structure it was declared with."""
    pass


class SingularMatrixError(FemError):
    """Raised when a circulant eigenvalue or Schur pivot falls below threshold."""
    pass


class FactorizationError(FemError):
    """Raised when a banded factorization meets a zero pivot."""
    pass


class RelaxationError(FemError):
    """Base exception for relaxation parameter failures."""
    pass


class NoRealRootError(RelaxationError):
    """Raised when the energy equation for gamma has no real root."""
    pass


class RootRejectedError(RelaxationError):
    """Raised when the root nearest to 1 is not an acceptable step scaling."""
    pass


class StepPolicyError(FemError, ValueError):
    """Raised when a time step policy yields too few steps."""
    pass
