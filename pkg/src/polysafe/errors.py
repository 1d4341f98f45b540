"""Exception hierarchy shared across the package."""


class PolysafeError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(PolysafeError):
    """Invalid constraint geometry or malformed input data."""


class NumericalBreakdown(PolysafeError):
    """The LP solver could not make progress even under Bland's rule."""


class EmptySet(PolysafeError):
    """A polyhedron that was required to be nonempty is empty."""


class TooManyHalfspaces(PolysafeError):
    """Subset enumeration requested beyond the supported cap."""


class AssumptionViolated(PolysafeError):
    """No interior witness point exists for an index set (margin <= 0)."""


class UnboundedPositions(PolysafeError):
    """A term of the position constraint set is unbounded."""


class ParameterViolation(PolysafeError):
    """The design parameters fail the strict gamma * delta > epsilon gate."""


class NotInC(PolysafeError):
    """A position outside the constraint set was passed to the lift."""


class EmptyFacet(PolysafeError):
    """A candidate boundary facet is empty (not part of the boundary)."""


class NotRightInvertible(PolysafeError):
    """G2 has no right inverse at the sampled state."""


class NotPositiveDefinite(PolysafeError):
    """A QP cost matrix failed its Cholesky factorization."""


class Infeasible(PolysafeError):
    """A constrained program admits no feasible point."""


class InsufficientActuation(PolysafeError):
    """The input bound cannot dominate the potential forcing (d <= kG * k1)."""


class SingularInertia(PolysafeError):
    """The arm inertia matrix is numerically singular."""


class NoSplit(PolysafeError):
    """The plant does not expose the potential/velocity force decomposition."""


class QpInfeasibleAt(PolysafeError):
    """The safeguarding QP became infeasible during a simulation."""

    def __init__(self, t, x, message=""):
        self.t = t
        self.x = x
        super().__init__(f"QP infeasible at t={t:.6g}: {message}")


class NonFinite(PolysafeError):
    """NaN or Inf detected in a simulated state."""
