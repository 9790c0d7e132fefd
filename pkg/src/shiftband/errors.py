"""Exception hierarchy shared by every shiftband module."""


class ShiftbandError(Exception):
    """Base class for all library errors."""


class RangeError(ShiftbandError, IndexError):
    """A round or arm index lies outside the model."""


class ConfigError(ShiftbandError, ValueError):
    """Infeasible or malformed configuration."""


class ValidationError(ShiftbandError, ValueError):
    """Input data violates a documented invariant."""


class ResourceLimitError(ShiftbandError, RuntimeError):
    """A computation would exceed a configured size cap."""


class ProtocolError(ShiftbandError, RuntimeError):
    """The select/observe call discipline was violated."""


class HorizonExhausted(ShiftbandError, StopIteration):
    """Raised by ``select`` once every round of the horizon has been played."""


class NumericError(ShiftbandError, ArithmeticError):
    """Degenerate numeric input (e.g. non-positive values on a log scale)."""
