"""Exception types raised across the package."""


class PrefKError(Exception):
    """Base class for every error raised by prefk."""


class InvalidInput(PrefKError, ValueError):
    pass


class SingularMatrix(PrefKError, ValueError):
    pass


class InfiniteDivergence(PrefKError, ArithmeticError):
    """A divergence is +inf (mass of P where Q has none).

    ``index`` is set by batch reductions to the offending pair.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class UseKLInstead(PrefKError, ValueError):
    pass


class InvalidFunction(PrefKError, ValueError):
    pass


class InvalidKernelForm(PrefKError, TypeError):
    pass


class RangeUndefined(PrefKError, ValueError):
    pass


class DegenerateRatio(PrefKError, ArithmeticError):
    pass


class NotDifferentiableHere(PrefKError, NotImplementedError):
    pass


class NumericalFailure(PrefKError, ArithmeticError):
    pass


class DegenerateTriplet(PrefKError, ArithmeticError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class KurtosisUndefined(PrefKError, ArithmeticError):
    pass


class DegenerateClusters(PrefKError, ArithmeticError):
    pass


class ConfigError(PrefKError, ValueError):
    pass
