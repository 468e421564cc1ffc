"""Exception types raised across the package."""


class ArboError(Exception):
    """Base class for all package errors."""


# decision diagrams
class EmptyDiagram(ArboError):
    pass


class InvalidMode(ArboError):
    pass


class CapExceeded(ArboError):
    pass


class Infeasible(ArboError):
    pass


# recursions
class NegativeWeight(ArboError):
    pass


class UnknownLink(ArboError):
    pass


# MILP core
class NumericalFailure(ArboError):
    pass


class NameCollision(ArboError):
    pass


class LPParseError(ArboError):
    pass


class ExternalSolverError(ArboError):
    pass


# model builders
class UnboundedUncertainty(ArboError):
    pass


class DiagramMismatch(ArboError):
    pass


class OverlappingVariableMismatch(ArboError):
    pass


class ShapeMismatch(ArboError):
    pass


# evaluation
class InfeasibleRecourse(ArboError):
    pass


class IterationCapExceeded(ArboError):
    pass


# instances
class SchemaViolation(ArboError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class GenerationFailure(ArboError):
    pass
