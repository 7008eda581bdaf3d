"""Exception types shared across the package."""


class ConvexLabError(Exception):
    """Base class for all package errors."""


class InadmissibleSpec(ConvexLabError):
    """Domain parameters violate the family's admissibility constraint."""


class UnsupportedDimension(ConvexLabError):
    pass


class RollingBallViolation(InadmissibleSpec):
    """Support body has a principal radius of curvature above 1."""

    def __init__(self, max_radius):
        self.max_radius = float(max_radius)
        super().__init__(f"max principal radius of curvature {self.max_radius:.6g} > 1")


class QuadricFitFailure(ConvexLabError):
    """Local quadric fit failed at a boundary vertex (rank-deficient 2-ring)."""

    def __init__(self, vertex_index, message="rank-deficient neighborhood"):
        self.vertex_index = int(vertex_index)
        super().__init__(f"vertex {vertex_index}: {message}")


class DegenerateCell(ConvexLabError):
    def __init__(self, cell_index):
        self.cell_index = int(cell_index)
        super().__init__(f"cell {cell_index} has (numerically) zero volume")


class SolverDivergence(ConvexLabError):
    def __init__(self, iterations, residual):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(
            f"iterative solve did not converge in {iterations} iterations "
            f"(residual {residual:.3e})"
        )


class EigenNoConvergence(ConvexLabError):
    pass


class QuadratureFailure(ConvexLabError):
    def __init__(self, achieved, requested):
        self.achieved = float(achieved)
        self.requested = float(requested)
        super().__init__(
            f"quadrature reached relative tolerance {achieved:.3e} "
            f"(requested {requested:.3e})"
        )


class NewtonStall(ConvexLabError):
    pass


class NonPositiveIterate(ConvexLabError):
    pass


class UnsupportedExponentForm(ConvexLabError):
    """Power nonlinearity requested on a 2D mesh (use the exponential form)."""


class DomainViolation(ConvexLabError):
    pass


class PrimeCollision(ConvexLabError):
    pass


class NonManifoldBoundary(ConvexLabError):
    pass


class HypothesisNotMet(ConvexLabError):
    pass


class NonpositiveMeanCurvature(ConvexLabError):
    pass


class WrongGenus(ConvexLabError):
    pass
