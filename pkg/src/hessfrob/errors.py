"""Exception hierarchy shared by all modules."""


class HessfrobError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HessfrobError, ValueError):
    """A point (or stencil point) lies outside the domain of a potential."""


class BoundaryError(DomainError):
    """A point lies on (or outside) the boundary of an open simplex."""


class ConvexityError(HessfrobError, ValueError):
    """A Hessian that should be positive definite is not."""


class SingularMetricError(HessfrobError, ValueError):
    pass


class DimensionMismatchError(HessfrobError, ValueError):
    pass


class ZeroFunctionError(HessfrobError, ValueError):
    pass


class NotInFamilyError(HessfrobError, ValueError):
    """Moment matching failed to reach a member of the family."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class GridError(HessfrobError, ValueError):
    pass


class ParseError(HessfrobError, ValueError):
    pass


class NotInvertibleError(HessfrobError, ValueError):
    """The exponent matrix does not describe an invertible polynomial."""


class NotSquareError(NotInvertibleError):
    pass


class ZeroDeterminantError(NotInvertibleError):
    pass


class NonPositiveWeightError(NotInvertibleError):
    pass


class ZeroVectorError(HessfrobError, ValueError):
    pass


class NoSolutionFoundError(HessfrobError, RuntimeError):
    pass


class SingularBasisError(HessfrobError, ValueError):
    pass


class NotSymmetricError(HessfrobError, ValueError):
    pass


class NotInConeError(HessfrobError, ValueError):
    pass


class UnknownPotentialError(HessfrobError, KeyError):
    pass
