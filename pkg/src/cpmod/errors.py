"""Exception hierarchy.

Every error the library raises derives from :class:`CPModError`, which is a
``ValueError`` so callers that only care about bad input can catch that.
"""


class CPModError(ValueError):
    """Base class for all library errors."""


class DimensionMismatch(CPModError):
    pass


class ShapeMismatch(CPModError):
    pass


class ModuleMismatch(CPModError):
    pass


class NotHermitian(CPModError):
    pass


class NotPSD(CPModError):
    pass


class NotCP(CPModError):
    pass


class NotAModuleCPMap(CPModError):
    """The candidate map admits no underlying CP map on the algebra."""


class NotInCommutant(CPModError):
    pass


class NoCompatibleS(CPModError):
    pass


class NotEquivalent(CPModError):
    pass


class NotDominated(CPModError):
    pass


class NotMinimal(CPModError):
    pass


class InvalidDerivative(CPModError):
    pass


class ZeroMap(CPModError):
    pass


class ProblemFileError(CPModError):
    """Malformed or schema-violating problem/element file."""


class BorderlineRankWarning(UserWarning):
    """An eigenvalue sits close to the rank threshold; rank decisions may be fragile."""
