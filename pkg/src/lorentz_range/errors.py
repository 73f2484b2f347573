"""Exception types raised by the lab."""


class LabError(Exception):
    pass


class EmptyInput(LabError, ValueError):
    pass


class NotDecreasing(LabError, ValueError):
    pass


class AtSingularity(LabError, ValueError):
    pass


class TailDivergent(LabError, ArithmeticError):
    """Raised when u * int_u^inf psi(t)/t^2 dt does not converge."""


class NotHermitian(LabError, ValueError):
    pass


class ZeroMatrix(LabError, ValueError):
    pass


class ZeroDifference(LabError, ValueError):
    pass


class DimensionMismatch(LabError, ValueError):
    pass


class BadSpec(LabError, ValueError):
    pass
