"""Exception hierarchy shared by all modules."""


class SelfSimError(Exception):
    """Base class for library errors."""


class BandError(SelfSimError, ValueError):
    """A similarity exponent or parameter lies outside its admissible band."""


class NonConvergenceError(SelfSimError, ArithmeticError):
    """A series or quadrature did not behave as its declared asymptotics promise."""


class SamplingError(SelfSimError, ValueError):
    """Input data is too coarse or too short for the requested estimate."""


class InstabilityError(SelfSimError, RuntimeError):
    """A time integration left its stable regime."""
