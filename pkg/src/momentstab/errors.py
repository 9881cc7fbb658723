"""Exception hierarchy shared by all modules.

The CLI maps these onto its exit codes, so every failure that a caller
can act on has its own class.
"""


class MomentStabError(Exception):
    """Base class for every error raised by this package."""


class SpecError(MomentStabError, ValueError):
    """Malformed or invalid input (system spec, problem parameters)."""


class IndexOutOfRange(SpecError, IndexError):
    pass


class InconsistentSpec(SpecError):
    pass


class NonFiniteEvaluation(MomentStabError, ArithmeticError):
    pass


class BasisTooLarge(MomentStabError):
    def __init__(self, required, cap):
        self.required = required
        self.cap = cap
        super().__init__(
            f"moment basis needs {required} elements, cap is {cap}")


class EigenSolveFailure(MomentStabError, ArithmeticError):
    pass


class DegenerateEigenvalue(MomentStabError):
    pass


class VanishingPairing(MomentStabError):
    pass


class NotSemisimple(MomentStabError):
    pass


class SingularPairing(MomentStabError):
    pass


class OverflowDetected(MomentStabError, OverflowError):
    """Raised when a caller insists on a complete trace but paths blew up.

    :func:`momentstab.sde_mc.simulate_ensemble` itself returns a truncated
    trace with ``overflow=True``; this is raised by consumers that need the
    full horizon.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NonPositiveMoment(MomentStabError, ValueError):
    pass


class InsufficientSamples(MomentStabError, ValueError):
    pass


class SolverFailure(MomentStabError):
    """Base for numerical solver failures in the Langmuir problems."""


class NoBoundState(SolverFailure):
    pass


class GridTooCoarse(SolverFailure):
    pass


class BracketNotFound(SolverFailure):
    pass
