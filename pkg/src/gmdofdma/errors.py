"""Exception hierarchy shared by all modules."""


class GmdOfdmaError(Exception):
    """Base class for every error raised by this package."""


class NonConvergence(GmdOfdmaError, ArithmeticError):
    pass


class RankDeficient(GmdOfdmaError, ArithmeticError):
    """A (numerically) zero pivot or singular value was met.

    Under continuous fading this is a probability-zero event; the
    simulation layer catches it and redraws the channel.
    """


class IndexOutOfRange(GmdOfdmaError, IndexError):
    pass


class DimensionMismatch(GmdOfdmaError, ValueError):
    pass


class CapacityExceeded(GmdOfdmaError, MemoryError):
    pass


class EmptyCodebook(GmdOfdmaError, ValueError):
    pass


class OddBitCount(GmdOfdmaError, ValueError):
    pass


class MixedSchemes(GmdOfdmaError, ValueError):
    pass


class EmptyReports(GmdOfdmaError, ValueError):
    pass


class InvalidPlan(GmdOfdmaError, ValueError):
    pass


class ConfigInvalid(GmdOfdmaError, ValueError):
    pass
