"""Exception hierarchy shared by all treedom modules."""


class TreedomError(Exception):
    pass


class DomainError(TreedomError, ValueError):
    """Input outside the domain of a function (non-finite, d < 2, J <= 0, ...)."""


class PreconditionError(TreedomError, ValueError):
    """A hypothesis required by a result is not satisfied by the parameters."""


class SizeError(TreedomError, ValueError):
    """A finite tree is too large for an exact (exponential-size) computation."""


class ConsistencyError(TreedomError, RuntimeError):
    """Two independent routes to the same quantity disagree."""


class SingularityError(TreedomError, ArithmeticError):
    """An implicit-function derivative hits a vanishing denominator."""
