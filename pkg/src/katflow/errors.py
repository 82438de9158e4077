"""Exception hierarchy shared by every katflow module."""


class KatflowError(Exception):
    """Base class for all katflow errors."""

    #: optional FlowTrace attached by the flow integrator before re-raising
    trace = None


# geometry kernel
class NotRealDisk(KatflowError, ValueError):
    pass


class ZeroVector(KatflowError, ValueError):
    pass


class DegenerateTriple(KatflowError, ValueError):
    pass


class SameBoundary(KatflowError, ValueError):
    pass


class NotLorentz(KatflowError, ValueError):
    pass


# combinatorics
class NotTriangulation(KatflowError, ValueError):
    pass


class NotThreeConnected(KatflowError, ValueError):
    pass


class BadOrientation(KatflowError, ValueError):
    pass


# predicates
class AntipodalEdge(KatflowError, ValueError):
    pass


# rigidity
class SingularAtPin(KatflowError, ArithmeticError):
    pass


class TooSmall(KatflowError, ValueError):
    pass


class IllConditioned(KatflowError, ArithmeticError):
    pass


# flow / solver
class PreconditionError(KatflowError, ValueError):
    pass


class MonitorViolation(KatflowError, ArithmeticError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class MaxSteps(KatflowError, RuntimeError):
    pass


class NoValidPin(KatflowError, RuntimeError):
    pass


class NonConvergent(KatflowError, RuntimeError):
    pass


class NormalizationFailed(KatflowError, RuntimeError):
    pass


class KatViolation(KatflowError, ValueError):
    def __init__(self, msg, violations=()):
        super().__init__(msg)
        self.violations = list(violations)


class TetrahedronError(KatflowError, ValueError):
    pass


class ParseError(KatflowError, ValueError):
    pass
