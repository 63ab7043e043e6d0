"""Exception hierarchy shared by all modules.

The CLI prints ``type(exc).__name__`` on stderr, so class names are part of
the public interface.
"""


class RamifiedError(Exception):
    """Base class for every domain error raised by this package."""


class NegativeMass(RamifiedError):
    pass


class DimensionMismatch(RamifiedError):
    pass


class TotalMassNotOne(RamifiedError):
    pass


class ResourceLimit(RamifiedError):
    pass


class AlphaOutOfRange(RamifiedError):
    pass


class InvalidNetwork(RamifiedError):
    pass


class InvalidPlan(RamifiedError):
    pass


class UnmatchedAtom(RamifiedError):
    pass


class KirchhoffViolation(RamifiedError):
    pass


class NotATree(RamifiedError):
    pass


class UnbalancedMass(RamifiedError):
    pass


class IterationLimit(RamifiedError):
    pass


class Infeasible(RamifiedError):
    pass


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha!r}")
    return alpha
