"""Exception hierarchy.

``DomainError`` subclasses are outcomes of the mathematics (no feasible
layer, complex spectrum, ...); the CLI maps them to exit code 1.
``ParseError`` covers bad input files and maps to exit code 2.
"""


class MulticonsensusError(Exception):
    pass


class ParseError(MulticonsensusError):
    pass


class DomainError(MulticonsensusError):
    pass


class GraphError(DomainError, ValueError):
    pass


class PartitionError(DomainError, ValueError):
    pass


class Infeasible(DomainError):
    pass


class BudgetExceeded(DomainError):
    pass


class InsufficientSources(DomainError):
    pass


class SignViolation(DomainError):
    pass


class ComplexSpectrum(DomainError):
    pass


class EmptyDifference(DomainError):
    pass


class NonConvergence(DomainError):
    pass


class NonFinite(DomainError):
    pass
