"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name) and,
when the failure can be traced to the input text, the index of the sentence
that triggered it.
"""

from __future__ import annotations


class HeatFrameError(Exception):
    """Base class for all errors raised by the package."""

    def __init__(self, message: str, *, sentence: int | None = None):
        super().__init__(message)
        self.message = message
        self.sentence = sentence

    @property
    def code(self) -> str:
        return type(self).__name__

    def as_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "sentence": self.sentence}


# text frontend
class EmptyInput(HeatFrameError):
    pass


class UnbalancedDelimiter(HeatFrameError):
    pass


# conduction parser
class MalformedDatabase(HeatFrameError):
    pass


class ConflictingState(HeatFrameError):
    pass


class CyclicInheritance(HeatFrameError):
    pass


class NoComponents(HeatFrameError):
    pass


class MissingDomain(HeatFrameError):
    pass


class OverlappingDomains(HeatFrameError):
    pass


class IncompleteRobin(HeatFrameError):
    pass


class UnknownFace(HeatFrameError):
    pass


class MissingConductivity(HeatFrameError):
    pass


class DuplicateBinding(HeatFrameError):
    pass


class NonNumericRHS(HeatFrameError):
    pass


class ExpressionError(HeatFrameError):
    pass


# template / geometry
class UncoveredBoundary(HeatFrameError):
    pass


class ConflictingBoundaryCondition(HeatFrameError):
    pass


class MissingBinding(HeatFrameError):
    pass


class Unclassifiable(HeatFrameError):
    pass


class NonPositiveDimension(HeatFrameError):
    pass


class NoSharedFace(HeatFrameError):
    pass


class DanglingComponent(HeatFrameError):
    pass


# solvers
class SingularSystem(HeatFrameError):
    pass


class LocationOutsideDomain(HeatFrameError):
    pass


class DegenerateTriangle(HeatFrameError):
    pass


class BudgetExceeded(HeatFrameError):
    """Adaptive loop hit its dof cap; ``partial`` holds the last solution."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
