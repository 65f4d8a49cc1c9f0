"""Exception hierarchy for the solver.

Every error raised on purpose by this package derives from ``VTBemError`` so
the command line front end can map failures onto exit codes.
"""


class VTBemError(Exception):
    """Base class for all package errors."""


class NonPhysical(VTBemError, ValueError):
    pass


class BranchDegenerate(VTBemError, ValueError):
    pass


class DomainError(VTBemError, ValueError):
    pass


# geometry ------------------------------------------------------------------
class GeometryError(VTBemError):
    """Base class for geometry problems (exit code 3)."""


class DegenerateCurve(GeometryError, ValueError):
    pass


class FinTooLong(GeometryError, ValueError):
    pass


class GeometryViolation(GeometryError, ValueError):
    def __init__(self, message, corner=None):
        super().__init__(message)
        self.corner = corner


class ClosedCurve(GeometryError, ValueError):
    pass


class MissingFins(GeometryError, ValueError):
    pass


class ParityMismatch(GeometryError, ValueError):
    pass


class InterfaceMismatch(GeometryError, ValueError):
    pass


class SourceInsideDomain(GeometryError, ValueError):
    pass


# quadrature / solver ---------------------------------------------------------
class SolverError(VTBemError):
    """Base class for numerical failures (exit code 4)."""


class AdaptiveFailure(SolverError, RuntimeError):
    pass


class FinitePartKernel(SolverError, ValueError):
    pass


class SingularSystem(SolverError, RuntimeError):
    pass


class SingularStarBlock(SingularSystem):
    pass


class SingularReducedSystem(SingularSystem):
    pass


class NonzeroStarData(SolverError, ValueError):
    pass


class IllConditionedCoupling(SolverError, RuntimeError):
    pass


class ModeResonance(SolverError, ValueError):
    pass


class TargetTooClose(VTBemError, UserWarning):
    """Warning category for field targets inside the accuracy exclusion strip."""


# config ----------------------------------------------------------------------
class SchemaError(VTBemError, ValueError):
    def __init__(self, message, path=()):
        loc = ".".join(str(p) for p in path)
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = tuple(path)


class UnknownKey(SchemaError):
    pass
