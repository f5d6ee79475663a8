"""
Problem data model for simultaneous assignments: instances, assignments,
validation, feasibility checking, restriction and structural predicates.
"""
import functools
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from errors import InstanceValidationError, UnboundedError, UnknownEdgeError, ValidationIssue
from logger import get_logger

logger = get_logger(__name__)


@functools.total_ordering
class Infinite:
    """Symbolic unbounded value; compares greater than every number."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other):
        return isinstance(other, Infinite)

    def __lt__(self, other):
        return False

    def __hash__(self):
        return hash('Infinite')

    def __repr__(self):
        return 'INFINITE'

    def __str__(self):
        return 'inf'

    def __reduce__(self):
        return (Infinite, ())


INFINITE = Infinite()

Bound = Union[int, Infinite]


def is_infinite(value) -> bool:
    return isinstance(value, Infinite)


def bound_min(values: Iterable[Bound]) -> Bound:
    """Minimum of bounds; INFINITE for an empty iterable."""
    best: Bound = INFINITE
    for value in values:
        if value < best:
            best = value
    return best


# Violation / issue kinds
LOOP_EDGE = 'LoopEdge'
UNKNOWN_NODE = 'UnknownNode'
DUPLICATE_ID = 'DuplicateId'
UNKNOWN_EDGE_IN_SUBGRAPH = 'UnknownEdgeInSubgraph'
MISSING_DEGREE_BOUND = 'MissingDegreeBound'
UNEXPECTED_DEGREE_BOUND = 'UnexpectedDegreeBound'
EMPTY_LAMINAR_SET = 'EmptyLaminarSet'
NON_LAMINAR_FAMILY = 'NonLaminarFamily'
NEGATIVE_VALUE = 'NegativeValue'
NON_INTEGER_VALUE = 'NonIntegerValue'

CAPACITY = 'Capacity'
SUBGRAPH_DEGREE = 'SubgraphDegree'
DEGREE_SUM = 'DegreeSum'


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    w: int = 1
    c: Bound = INFINITE

    def endpoints(self) -> Tuple[str, str]:
        return (self.u, self.v)

    def other(self, node: str) -> str:
        return self.v if node == self.u else self.u


@dataclass(frozen=True, eq=False)
class SubgraphConstraint:
    """A subgraph H with its degree bound b_H on every incident node."""
    id: str
    edge_ids: FrozenSet[str]
    b: Mapping[str, int]

    def __eq__(self, other):
        if not isinstance(other, SubgraphConstraint):
            return NotImplemented
        return (self.id, self.edge_ids, dict(self.b)) == (other.id, other.edge_ids, dict(other.b))

    def __hash__(self):
        return hash((self.id, self.edge_ids))


@dataclass(frozen=True)
class LaminarConstraint:
    """A degree-sum bound g on a node set L."""
    id: str
    node_ids: FrozenSet[str]
    g: Bound


@dataclass(frozen=True, eq=False)
class Instance:
    """
    A simultaneous assignment instance.

    Instances are plain values: build one directly and pass it through
    validate_instance before handing it to a solver.
    """
    nodes: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    subgraphs: Tuple[SubgraphConstraint, ...] = ()
    laminar_sets: Tuple[LaminarConstraint, ...] = ()

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.nodes, self.edges, self.subgraphs, self.laminar_sets) == \
            (other.nodes, other.edges, other.subgraphs, other.laminar_sets)

    def __hash__(self):
        return hash((self.nodes, self.edges))

    @functools.cached_property
    def edge_map(self) -> Dict[str, Edge]:
        return {edge.id: edge for edge in self.edges}

    @functools.cached_property
    def edge_ids(self) -> Tuple[str, ...]:
        """Edge ids in lexicographic order."""
        return tuple(sorted(edge.id for edge in self.edges))

    @functools.cached_property
    def incidence(self) -> Dict[str, Tuple[str, ...]]:
        """Node id to the ids of its incident edges, sorted."""
        incident: Dict[str, List[str]] = {node: [] for node in self.nodes}
        for edge in self.edges:
            incident.setdefault(edge.u, []).append(edge.id)
            incident.setdefault(edge.v, []).append(edge.id)
        return {node: tuple(sorted(ids)) for node, ids in incident.items()}

    @property
    def k(self) -> int:
        return len(self.subgraphs)

    def trace(self, subgraph: SubgraphConstraint, node: str) -> FrozenSet[str]:
        """Delta_H(v): edges of the subgraph incident to the node."""
        return frozenset(e for e in self.incidence.get(node, ()) if e in subgraph.edge_ids)


@dataclass(frozen=True)
class Violation:
    kind: str
    location: Union[str, Tuple[str, str]]
    amount: int

    def __str__(self) -> str:
        return f"{self.kind} at {self.location}: excess {self.amount}"


@dataclass(frozen=True, eq=False)
class Assignment:
    """Integral edge vector with its cached objective."""
    x: Mapping[str, int]
    objective: int

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return dict(self.x) == dict(other.x) and self.objective == other.objective

    def __hash__(self):
        return hash(tuple(sorted(self.x.items())))

    @classmethod
    def from_values(cls, inst: Instance, values: Mapping[str, int]) -> 'Assignment':
        """
        Build an assignment over all instance edges, zero-filling missing ones.

        Raises:
            UnknownEdgeError: if values mention an edge not in the instance
        """
        unknown = set(values) - set(inst.edge_map)
        if unknown:
            raise UnknownEdgeError(unknown)
        x = {edge_id: int(values.get(edge_id, 0)) for edge_id in inst.edge_ids}
        objective = sum(inst.edge_map[e].w * value for e, value in x.items())
        return cls(x=x, objective=objective)

    @classmethod
    def zero(cls, inst: Instance) -> 'Assignment':
        return cls.from_values(inst, {})

    def extend(self, inst: Instance) -> 'Assignment':
        """Extend an assignment of a restriction by zeros to the full instance."""
        return Assignment.from_values(inst, {e: v for e, v in self.x.items() if v})

    def support(self) -> List[str]:
        return sorted(e for e, value in self.x.items() if value)


@dataclass(frozen=True)
class ConstraintRow:
    """One packing row of LP1: sum of coef * x_e <= rhs."""
    key: Tuple[str, ...]
    kind: str
    rhs: Bound
    coefs: Mapping[str, int] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return ':'.join(self.key)


def constraint_rows(inst: Instance) -> List[ConstraintRow]:
    """
    The subgraph degree rows and degree-sum rows of an instance.

    Edges induced inside a degree-sum set get coefficient 2, edges with a
    single endpoint inside get 1.
    """
    rows: List[ConstraintRow] = []
    for subgraph in inst.subgraphs:
        for node in sorted(subgraph.b):
            trace = inst.trace(subgraph, node)
            rows.append(ConstraintRow(
                key=('deg', subgraph.id, node),
                kind=SUBGRAPH_DEGREE,
                rhs=subgraph.b[node],
                coefs={e: 1 for e in sorted(trace)},
            ))
    for lam in inst.laminar_sets:
        coefs: Dict[str, int] = {}
        for edge in inst.edges:
            inside = (edge.u in lam.node_ids) + (edge.v in lam.node_ids)
            if inside:
                coefs[edge.id] = coefs.get(edge.id, 0) + inside
        rows.append(ConstraintRow(
            key=('sum', lam.id),
            kind=DEGREE_SUM,
            rhs=lam.g,
            coefs=dict(sorted(coefs.items())),
        ))
    return rows


# Laminar family checks

def is_laminar_family_pairwise(sets: Sequence[FrozenSet]) -> Optional[Tuple[int, int]]:
    """Reference O(n^2) check; returns the first crossing index pair or None."""
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            a, b = sets[i], sets[j]
            if a & b and not (a <= b or b <= a):
                return (i, j)
    return None


def is_laminar_family(sets: Sequence[FrozenSet]) -> Optional[Tuple[int, int]]:
    """
    Laminarity test by decreasing size.

    Every new set must lie entirely inside the innermost set seen so far for
    each of its elements. Returns a crossing index pair (smaller index first)
    or None when the family is laminar.
    """
    order = sorted(range(len(sets)), key=lambda i: (-len(sets[i]), i))
    owner: Dict[object, int] = {}
    for index in order:
        members = sets[index]
        owners = {owner.get(u) for u in members}
        if len(owners) > 1:
            # Some earlier set crosses this one; find it directly.
            for other in order:
                if other == index:
                    break
                a = sets[other]
                if a & members and not (a <= members or members <= a):
                    return (min(index, other), max(index, other))
        for u in members:
            owner[u] = index
    return None


# Validation

def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_bound(value, location, issues: List[ValidationIssue], allow_infinite: bool):
    if allow_infinite and is_infinite(value):
        return
    if not _is_int(value):
        issues.append(ValidationIssue(NON_INTEGER_VALUE, f"expected a nonnegative integer, got {value!r}", location))
    elif value < 0:
        issues.append(ValidationIssue(NEGATIVE_VALUE, f"value {value} is negative", location))


def validate_instance(raw: Instance) -> Instance:
    """
    Check every instance invariant.

    Args:
        raw: an instance built directly from its fields

    Returns:
        The same instance when all invariants hold

    Raises:
        InstanceValidationError: listing every violated invariant
    """
    issues: List[ValidationIssue] = []
    node_set = set(raw.nodes)
    if len(node_set) != len(raw.nodes):
        issues.append(ValidationIssue(DUPLICATE_ID, "duplicate node id", 'nodes'))

    seen_edges = set()
    for edge in raw.edges:
        location = f"edge {edge.id}"
        if edge.id in seen_edges:
            issues.append(ValidationIssue(DUPLICATE_ID, "duplicate edge id", location))
        seen_edges.add(edge.id)
        if edge.u == edge.v:
            issues.append(ValidationIssue(LOOP_EDGE, f"loop at node {edge.u}", location))
        for endpoint in (edge.u, edge.v):
            if endpoint not in node_set:
                issues.append(ValidationIssue(UNKNOWN_NODE, f"endpoint {endpoint} is not a node", location))
        _check_bound(edge.w, f"{location} weight", issues, allow_infinite=False)
        _check_bound(edge.c, f"{location} capacity", issues, allow_infinite=True)

    edge_map = {edge.id: edge for edge in raw.edges}
    seen_subgraphs = set()
    for subgraph in raw.subgraphs:
        location = f"subgraph {subgraph.id}"
        if subgraph.id in seen_subgraphs:
            issues.append(ValidationIssue(DUPLICATE_ID, "duplicate subgraph id", location))
        seen_subgraphs.add(subgraph.id)
        incident = set()
        for edge_id in sorted(subgraph.edge_ids):
            edge = edge_map.get(edge_id)
            if edge is None:
                issues.append(ValidationIssue(UNKNOWN_EDGE_IN_SUBGRAPH, f"edge {edge_id} is not an instance edge", location))
            else:
                incident.update(edge.endpoints())
        for node in sorted(incident - set(subgraph.b)):
            issues.append(ValidationIssue(MISSING_DEGREE_BOUND, f"no bound for incident node {node}", location))
        for node in sorted(set(subgraph.b) - incident):
            issues.append(ValidationIssue(UNEXPECTED_DEGREE_BOUND, f"bound given for non-incident node {node}", location))
        for node in sorted(subgraph.b):
            _check_bound(subgraph.b[node], f"{location} node {node}", issues, allow_infinite=False)

    seen_laminar = set()
    for lam in raw.laminar_sets:
        location = f"laminar set {lam.id}"
        if lam.id in seen_laminar:
            issues.append(ValidationIssue(DUPLICATE_ID, "duplicate laminar set id", location))
        seen_laminar.add(lam.id)
        if not lam.node_ids:
            issues.append(ValidationIssue(EMPTY_LAMINAR_SET, "laminar set is empty", location))
        for node in sorted(lam.node_ids - node_set):
            issues.append(ValidationIssue(UNKNOWN_NODE, f"node {node} is not an instance node", location))
        _check_bound(lam.g, f"{location} bound", issues, allow_infinite=True)

    crossing = is_laminar_family([lam.node_ids for lam in raw.laminar_sets])
    if crossing is not None:
        first, second = (raw.laminar_sets[i].id for i in crossing)
        issues.append(ValidationIssue(NON_LAMINAR_FAMILY, f"sets {first} and {second} cross", (first, second)))

    if issues:
        logger.info(f"Instance rejected with {len(issues)} issue(s)")
        raise InstanceValidationError(issues)
    return raw


# Feasibility

def is_feasible(inst: Instance, x: Union[Assignment, Mapping[str, int]]) -> List[Violation]:
    """
    List every constraint the assignment violates.

    Args:
        inst: a validated instance
        x: an assignment, or a plain mapping defined on the instance edges

    Returns:
        Violations sorted by kind and location; empty when feasible
    """
    values = x.x if isinstance(x, Assignment) else x
    violations: List[Violation] = []
    for edge_id in inst.edge_ids:
        value = values.get(edge_id, 0)
        if value < 0:
            violations.append(Violation(CAPACITY, edge_id, -value))
        capacity = inst.edge_map[edge_id].c
        if not is_infinite(capacity) and value > capacity:
            violations.append(Violation(CAPACITY, edge_id, value - capacity))
    for row in constraint_rows(inst):
        if is_infinite(row.rhs):
            continue
        load = sum(coef * values.get(e, 0) for e, coef in row.coefs.items())
        if load > row.rhs:
            location = (row.key[1], row.key[2]) if row.kind == SUBGRAPH_DEGREE else row.key[1]
            violations.append(Violation(row.kind, location, load - row.rhs))
    return violations


# Restriction and structure

def restrict(inst: Instance, keep: Iterable[str]) -> Instance:
    """
    Restrict an instance to a subset of its edges.

    Nodes, weights, capacities and degree-sum sets are unchanged; subgraphs
    are intersected with keep and dropped when they become empty.

    Raises:
        UnknownEdgeError: if keep mentions an edge not in the instance
    """
    keep = frozenset(keep)
    unknown = keep - set(inst.edge_map)
    if unknown:
        raise UnknownEdgeError(unknown)
    edges = tuple(edge for edge in inst.edges if edge.id in keep)
    subgraphs = []
    for subgraph in inst.subgraphs:
        remaining = subgraph.edge_ids & keep
        if not remaining:
            continue
        incident = set()
        for edge_id in remaining:
            incident.update(inst.edge_map[edge_id].endpoints())
        subgraphs.append(SubgraphConstraint(
            id=subgraph.id,
            edge_ids=frozenset(remaining),
            b={node: bound for node, bound in subgraph.b.items() if node in incident},
        ))
    return Instance(nodes=inst.nodes, edges=edges, subgraphs=tuple(subgraphs), laminar_sets=inst.laminar_sets)


def edge_categories(inst: Instance) -> Dict[str, FrozenSet[int]]:
    """
    Map each edge to the 1-based indices of the subgraphs containing it.

    Grouping edges by value gives the partition into categories C_I.
    """
    categories = {edge_id: set() for edge_id in inst.edge_ids}
    for index, subgraph in enumerate(inst.subgraphs, start=1):
        for edge_id in subgraph.edge_ids:
            categories[edge_id].add(index)
    return {edge_id: frozenset(indices) for edge_id, indices in categories.items()}


def category_partition(inst: Instance) -> Dict[FrozenSet[int], FrozenSet[str]]:
    """Nonempty categories C_I keyed by their index set I."""
    groups: Dict[FrozenSet[int], set] = defaultdict(set)
    for edge_id, indices in edge_categories(inst).items():
        groups[indices].add(edge_id)
    return {indices: frozenset(ids) for indices, ids in groups.items()}


def max_overlap(inst: Instance) -> int:
    """k': the largest number of subgraphs sharing one edge."""
    return max((len(indices) for indices in edge_categories(inst).values()), default=0)


@dataclass(frozen=True)
class LaminarityReport:
    ok: bool
    witness: Optional[Tuple[str, str, str]] = None

    def __bool__(self):
        return self.ok


def is_locally_laminar(inst: Instance) -> LaminarityReport:
    """
    Check that the subgraph traces at every node form a laminar family.

    Returns:
        A report that is truthy when locally laminar; otherwise the witness
        (node, first subgraph id, second subgraph id) at the first node in
        lexicographic order where two traces cross
    """
    for node in sorted(inst.incidence):
        traces = [inst.trace(subgraph, node) for subgraph in inst.subgraphs]
        crossing = is_laminar_family(traces)
        if crossing is not None:
            i, j = crossing
            return LaminarityReport(False, (node, inst.subgraphs[i].id, inst.subgraphs[j].id))
    return LaminarityReport(True)


def effective_capacities(inst: Instance) -> Dict[str, int]:
    """
    Finite per-edge bounds implied by the instance.

    The bound of uv is the minimum of c_e, b_H(u) and b_H(v) over subgraphs
    containing the edge, and g(L) over degree-sum sets meeting it (g(L)//2
    when both endpoints lie in L). Edges with no finite bound and weight 0
    get bound 0.

    Raises:
        UnboundedError: if a positively weighted edge has no finite bound
    """
    bounds: Dict[str, Bound] = {edge.id: edge.c for edge in inst.edges}
    for subgraph in inst.subgraphs:
        for edge_id in subgraph.edge_ids:
            edge = inst.edge_map[edge_id]
            bounds[edge_id] = bound_min([bounds[edge_id], subgraph.b[edge.u], subgraph.b[edge.v]])
    for lam in inst.laminar_sets:
        if is_infinite(lam.g):
            continue
        for edge in inst.edges:
            inside = (edge.u in lam.node_ids) + (edge.v in lam.node_ids)
            if inside:
                bounds[edge.id] = bound_min([bounds[edge.id], lam.g // inside])
    result: Dict[str, int] = {}
    for edge_id in inst.edge_ids:
        bound = bounds[edge_id]
        if is_infinite(bound):
            if inst.edge_map[edge_id].w > 0:
                raise UnboundedError(edge_id)
            bound = 0
        result[edge_id] = bound
    return result


def objective_of(inst: Instance, values: Mapping[str, Union[int, Fraction]]) -> Union[int, Fraction]:
    return sum((inst.edge_map[e].w * value for e, value in values.items()), 0)
