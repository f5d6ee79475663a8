"""
Exception hierarchy for the simultaneous assignment toolkit.
Every failure raised by a public operation derives from SAPError.
"""
from dataclasses import dataclass
from typing import Any, Iterable, List, Optional, Tuple


class SAPError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(SAPError):
    """Raised when a configured limit is unusable."""


class SolverError(SAPError):
    """Raised when an internal result fails its own verification."""


# Instance model errors

@dataclass(frozen=True)
class ValidationIssue:
    """A single violated instance invariant."""
    kind: str
    message: str
    location: Any = None

    def __str__(self) -> str:
        if self.location is None:
            return f"{self.kind}: {self.message}"
        return f"{self.kind} at {self.location}: {self.message}"


class InstanceValidationError(SAPError):
    """Raised with every violated invariant of a raw instance."""

    def __init__(self, issues: Iterable[ValidationIssue]):
        self.issues: List[ValidationIssue] = list(issues)
        summary = "; ".join(str(issue) for issue in self.issues[:5])
        if len(self.issues) > 5:
            summary += f"; ... ({len(self.issues)} issues)"
        super().__init__(summary)

    @property
    def kinds(self) -> List[str]:
        return [issue.kind for issue in self.issues]


class UnknownEdgeError(SAPError):
    """Raised when an edge id does not belong to the instance."""

    def __init__(self, edge_ids: Iterable[str]):
        self.edge_ids = sorted(edge_ids)
        super().__init__(f"Unknown edge ids: {', '.join(self.edge_ids)}")


class UnboundedError(SAPError):
    """Raised when a positively weighted edge has no finite bound."""

    def __init__(self, edge_id: str):
        self.edge_id = edge_id
        super().__init__(f"Edge {edge_id} has positive weight and no finite bound")


class TooLargeError(SAPError):
    """Raised when an exhaustive method would exceed its configured limit."""

    def __init__(self, what: str, size: int, limit: int):
        self.what = what
        self.size = size
        self.limit = limit
        super().__init__(f"{what}: size {size} exceeds limit {limit}")


class BadArgumentsError(SAPError):
    """Raised for parameter combinations outside the supported range."""


# Structural errors

class NotLaminarError(SAPError):
    """Raised when a set family contains two crossing sets."""

    def __init__(self, first: Any, second: Any):
        self.pair = (first, second)
        super().__init__(f"Sets {first} and {second} cross")


class NotLocallyLaminarError(SAPError):
    """Raised with the first node where two subgraph traces cross."""

    def __init__(self, witness: Tuple[str, str, str]):
        self.witness = witness
        node, first, second = witness
        super().__init__(f"Subgraphs {first} and {second} cross at node {node}")


class NotBipartiteError(SAPError):
    """Raised when an edge does not join the two sides."""


class SidedLaminarViolatedError(SAPError):
    """Raised when a degree-sum set meets both sides of a bipartition."""

    def __init__(self, laminar_id: str):
        self.laminar_id = laminar_id
        super().__init__(f"Laminar set {laminar_id} meets both sides")


class NotForestError(SAPError):
    """Raised when the graph contains a cycle."""


class NoLocalIntervalOrderError(SAPError):
    """Raised when no ordering of the subgraphs makes every trace an interval."""

    def __init__(self, node: str):
        self.node = node
        super().__init__(f"No interval order of the subgraphs exists at node {node}")


class NonEmptyLaminarSystemError(SAPError):
    """Raised when a construction requires the degree-sum system to be empty."""


class InfeasibleBoundsError(SAPError):
    """Raised when arc lower bounds cannot be met by any circulation."""


# Cover errors

class DepthExceededError(SAPError):
    """Raised when a labeled tree is deeper than the category size bound."""


class TooManySubgraphsError(SAPError):
    """Raised when the laminar cover enumeration budget is exceeded."""


class SparsityViolationError(SAPError):
    """Raised when no forest cover exists; carries a violating node set."""

    def __init__(self, witness: Iterable[str], induced: int, m: int, l: int):
        self.witness = frozenset(witness)
        self.induced = induced
        self.m = m
        self.l = l
        super().__init__(
            f"{l} * i(X) = {l * induced} > {m} * (|X| - 1) = {m * (len(self.witness) - 1)} "
            f"for X = {{{', '.join(sorted(self.witness))}}}"
        )


class NoStructureMatchedError(SAPError):
    """Raised when no structural cover applies to the instance."""


# Approximation errors

class ZeroIntegerOptimumError(SAPError):
    """Raised when the integer optimum is zero; both optima are still reported."""

    def __init__(self, lp_optimum: Any, integer_optimum: int):
        self.lp_optimum = lp_optimum
        self.integer_optimum = integer_optimum
        super().__init__("Integer optimum is 0, the gap is undefined")


# Reduction errors

class NotTwoRegularError(SAPError):
    """Raised when a 3DM element does not occur in exactly two triples."""

    def __init__(self, element: Optional[str] = None):
        self.element = element
        if element is None:
            super().__init__("3DM instance is not 2-regular")
        else:
            super().__init__(f"Element {element} does not occur in exactly two triples")


class InfeasibleSolutionError(SAPError):
    """Raised when a solution violates the instance it should solve."""

    def __init__(self, violations: Iterable[Any]):
        self.violations = list(violations)
        super().__init__(f"Solution has {len(self.violations)} violation(s)")


# Serialization errors

class InstanceSyntaxError(SAPError):
    """Raised when an input document is not well-formed."""


class SchemaError(SAPError):
    """Raised when an input document has the wrong shape; path is a JSON pointer."""

    def __init__(self, path: str, message: str):
        self.path = path or "/"
        self.message = message
        super().__init__(f"{self.path}: {message}")
