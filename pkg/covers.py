"""
(m, l)-covers of the edge set: the optimal laminar cover built from labeled
trees, forest covers by matroid partition, and covers for special graph shapes.
"""
import itertools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from config import LAMINAR_COVER_MAX_K
from core import Instance, category_partition, edge_categories, max_overlap
from errors import (
    BadArgumentsError,
    DepthExceededError,
    NonEmptyLaminarSystemError,
    NoStructureMatchedError,
    SolverError,
    SparsityViolationError,
    TooManySubgraphsError,
    UnknownEdgeError,
)
from logger import get_logger, log_performance
from netmatrix import local_interval_order

logger = get_logger(__name__)

LAMINAR_CATEGORY_UNION = 'LaminarCategoryUnion'
FOREST = 'Forest'
CYCLE = 'Cycle'
WHOLE_GRAPH = 'WholeGraph'
SINGLE_SUBGRAPH_UNION = 'SingleSubgraphUnion'

PART_KINDS = (LAMINAR_CATEGORY_UNION, FOREST, CYCLE, WHOLE_GRAPH, SINGLE_SUBGRAPH_UNION)


def _check_range(k: int, k_prime: int):
    if not (isinstance(k, int) and isinstance(k_prime, int)) or not 1 <= k_prime <= k:
        raise BadArgumentsError(f"expected 1 <= k' <= k, got k={k}, k'={k_prime}")


# Closed forms

def alpha(k: int, k_prime: int) -> Fraction:
    """
    Ratio of the best laminar cover when k subgraphs share edges at most k' at a time.

    Raises:
        BadArgumentsError: unless 1 <= k' <= k
    """
    _check_range(k, k_prime)
    return max(
        Fraction(sum(math.comb(k, i) for i in range(j + 1, k_prime + 1)), k - j)
        for j in range(k_prime)
    )


def tree_count(k: int, j: int) -> int:
    """|T_j| = k! / (k - j + 1)!"""
    return math.perm(k, j - 1)


def coefficients_a(k: int, k_prime: int) -> List[List[int]]:
    """
    Coverage matrix a[i][j]: how often the trees of depth j+1 cover a fixed
    category of size i+1.

    Raises:
        BadArgumentsError: unless 1 <= k' <= k
    """
    _check_range(k, k_prime)
    a = []
    for i in range(1, k_prime + 1):
        row = []
        for j in range(1, k_prime + 1):
            if i < j:
                row.append(math.factorial(k - i) * math.factorial(i) // math.factorial(k - j + 1))
            elif i == j:
                row.append(math.factorial(j))
            else:
                row.append(0)
        a.append(row)
    return a


def xtilde(k: int, k_prime: int) -> Tuple[List[Fraction], List[Fraction]]:
    """
    The solution of A x = 1 from the backward recursion, and its positive part.

    Returns:
        (x, x_plus) indexed by tree depth 1..k'
    """
    _check_range(k, k_prime)
    x = [Fraction(0)] * (k_prime + 1)
    x[k_prime] = Fraction(1, math.factorial(k_prime))
    for j in range(k_prime - 1, 0, -1):
        x[j] = (k - j - 1) * x[j + 1] + Fraction(2 * j - k + 1, math.factorial(j + 1))
    values = x[1:]
    return values, [max(value, Fraction(0)) for value in values]


def lp5_objective(k: int, x: Sequence[Fraction]) -> Fraction:
    """Total tree weight sum_j |T_j| x_j."""
    return sum((tree_count(k, j) * value for j, value in enumerate(x, start=1)), Fraction(0))


def pi_tilde(k: int, k_prime: int) -> Dict[FrozenSet[int], Fraction]:
    """
    Dual solution matching xtilde: every category larger than t gets 1/(k - t),
    where t is the last depth with a negative coordinate (0 if none).
    """
    x, _ = xtilde(k, k_prime)
    t = max((j for j, value in enumerate(x, start=1) if value < 0), default=0)
    return {
        frozenset(combo): (Fraction(1, k - t) if size > t else Fraction(0))
        for size in range(1, k_prime + 1)
        for combo in itertools.combinations(range(1, k + 1), size)
    }


# Labeled trees

@dataclass(frozen=True)
class LabeledTree:
    """Tree on v_0..v_k rooted at v_0; parents[i - 1] is the parent of v_i."""
    parents: Tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.parents)

    def parent(self, node: int) -> int:
        return self.parents[node - 1]

    def path(self, node: int) -> List[int]:
        """Labels from the child of v_0 down to node."""
        labels = []
        while node != 0:
            labels.append(node)
            node = self.parent(node)
        return list(reversed(labels))

    def path_labels(self, node: int) -> FrozenSet[int]:
        return frozenset(self.path(node))

    @property
    def depth(self) -> int:
        return max((len(self.path(node)) for node in range(1, self.k + 1)), default=0)

    @property
    def adjacency(self) -> Dict[int, List[int]]:
        adjacency: Dict[int, List[int]] = {node: [] for node in range(self.k + 1)}
        for child, parent in enumerate(self.parents, start=1):
            adjacency[parent].append(child)
            adjacency[child].append(parent)
        return {node: sorted(neighbours) for node, neighbours in adjacency.items()}


def tree_family(k: int, j: int) -> List[LabeledTree]:
    """
    T_j: a path v_0, l_1, ..., l_(j-1) with every other node hung from its end.

    Raises:
        BadArgumentsError: unless 1 <= j <= k
    """
    if not 1 <= j <= k:
        raise BadArgumentsError(f"expected 1 <= j <= k, got j={j}, k={k}")
    trees = []
    for path in itertools.permutations(range(1, k + 1), j - 1):
        parents = [0] * k
        previous = 0
        for label in path:
            parents[label - 1] = previous
            previous = label
        for label in range(1, k + 1):
            if label not in path:
                parents[label - 1] = previous
        trees.append(LabeledTree(tuple(parents)))
    return trees


def iter_labeled_trees(k: int) -> Iterator[LabeledTree]:
    """Labeled trees on v_0..v_k one at a time, in Pruefer sequence order."""
    if k < 0:
        raise BadArgumentsError(f"k must not be negative, got {k}")
    if k == 0:
        yield LabeledTree(())
        return
    for sequence in itertools.product(range(k + 1), repeat=k - 1):
        graph = nx.from_prufer_sequence(list(sequence)) if sequence else nx.path_graph(2)
        predecessors = dict(nx.bfs_predecessors(graph, 0))
        yield LabeledTree(tuple(predecessors[node] for node in range(1, k + 1)))


def all_labeled_trees(k: int, max_depth: Optional[int] = None) -> List[LabeledTree]:
    """Every labeled tree on v_0..v_k (from Pruefer sequences), optionally depth-limited."""
    trees = list(iter_labeled_trees(k))
    if max_depth is not None:
        trees = [tree for tree in trees if tree.depth <= max_depth]
    return trees


def tree_to_category_system(tree: LabeledTree, k: int, k_prime: int) -> FrozenSet[FrozenSet[int]]:
    """
    Categories represented by a tree: the labels on the path to each node,
    the empty category for v_0.

    Raises:
        BadArgumentsError: if the tree is not on k + 1 nodes
        DepthExceededError: if the tree is deeper than k'
    """
    if tree.k != k:
        raise BadArgumentsError(f"tree has {tree.k + 1} nodes, expected {k + 1}")
    if tree.depth > k_prime:
        raise DepthExceededError(f"tree depth {tree.depth} exceeds {k_prime}")
    return frozenset(tree.path_labels(node) for node in range(k + 1))


def category_counts(k: int, j: int) -> List[Fraction]:
    """
    Enumeration check of one column of coefficients_a: occurrences of size-i
    categories across T_j, divided by the number of such categories.
    """
    totals = [0] * (k + 1)
    for tree in tree_family(k, j):
        for node in range(1, k + 1):
            totals[len(tree.path(node))] += 1
    return [Fraction(totals[i], math.comb(k, i)) for i in range(1, k + 1)]


# Cover plans

@dataclass(frozen=True)
class CoverPart:
    edges: FrozenSet[str]
    kind: str
    multiplicity: int = 1
    label: str = ''


@dataclass(frozen=True)
class CoverPlan:
    """Edge subsets, with multiplicities, covering every edge at least l times."""
    parts: Tuple[CoverPart, ...]
    l: int

    @property
    def m(self) -> int:
        return sum(part.multiplicity for part in self.parts)

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.m, self.l)

    @property
    def part_kinds(self) -> List[str]:
        return [part.kind for part in self.parts]

    def coverage(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for part in self.parts:
            for edge_id in part.edges:
                counts[edge_id] = counts.get(edge_id, 0) + part.multiplicity
        return counts


def verify_plan(inst: Instance, plan: CoverPlan) -> List[str]:
    """
    Recount coverage.

    Returns:
        Edge ids covered fewer than l times, sorted

    Raises:
        UnknownEdgeError: if a part mentions an edge not in the instance
    """
    counts = plan.coverage()
    unknown = set(counts) - set(inst.edge_map)
    if unknown:
        raise UnknownEdgeError(unknown)
    return [edge_id for edge_id in inst.edge_ids if counts.get(edge_id, 0) < plan.l]


def plan_to_dict(plan: CoverPlan) -> Dict[str, Any]:
    return {
        'l': plan.l,
        'm': plan.m,
        'ratio': str(plan.ratio),
        'parts': [
            {
                'edges': sorted(part.edges),
                'kind': part.kind,
                'multiplicity': part.multiplicity,
                'label': part.label,
            }
            for part in plan.parts
        ],
    }


def plan_from_dict(data: Mapping[str, Any]) -> CoverPlan:
    """
    Read a plan back; parts may be plain edge-id arrays or part objects.

    Raises:
        BadArgumentsError: on a malformed plan
    """
    try:
        l = data['l']
        raw_parts = data['parts']
    except (KeyError, TypeError) as e:
        raise BadArgumentsError(f"cover plan is missing {e}") from e
    if not isinstance(l, int) or isinstance(l, bool) or l < 1:
        raise BadArgumentsError(f"cover plan l must be a positive integer, got {l!r}")
    parts = []
    for index, raw in enumerate(raw_parts):
        if isinstance(raw, list):
            parts.append(CoverPart(frozenset(raw), WHOLE_GRAPH))
            continue
        kind = raw.get('kind', WHOLE_GRAPH)
        multiplicity = raw.get('multiplicity', 1)
        if kind not in PART_KINDS:
            raise BadArgumentsError(f"part {index} has unknown kind {kind!r}")
        if not isinstance(multiplicity, int) or multiplicity < 1:
            raise BadArgumentsError(f"part {index} has invalid multiplicity {multiplicity!r}")
        parts.append(CoverPart(frozenset(raw['edges']), kind, multiplicity, raw.get('label', '')))
    return CoverPlan(tuple(parts), l)


def _whole_graph(inst: Instance, kind: str = WHOLE_GRAPH) -> CoverPlan:
    return CoverPlan((CoverPart(frozenset(inst.edge_ids), kind, 1, 'E'),), 1)


# Laminar cover

@log_performance('laminar_cover')
def laminar_cover(inst: Instance, max_k: Optional[int] = None) -> CoverPlan:
    """
    Optimal cover by unions of maximal laminar category systems.

    Trees of depth j are used z_j = l * x_j times, where x is the positive
    part of xtilde(k, k') and l the common denominator, so the ratio equals
    alpha(k, k').

    Raises:
        TooManySubgraphsError: if k exceeds the enumeration budget
    """
    max_k = LAMINAR_COVER_MAX_K if max_k is None else max_k
    k = inst.k
    if k > max_k:
        raise TooManySubgraphsError(f"{k} subgraphs exceed the laminar cover limit of {max_k}")
    k_prime = max_overlap(inst)
    if k == 0 or k_prime <= 1:
        return _whole_graph(inst)

    _, x_plus = xtilde(k, k_prime)
    l = math.lcm(*(value.denominator for value in x_plus))
    z = [int(value * l) for value in x_plus]
    partition = category_partition(inst)

    parts = []
    for j, times in enumerate(z, start=1):
        if not times:
            continue
        for tree in tree_family(k, j):
            system = tree_to_category_system(tree, k, k_prime)
            edges = frozenset().union(*(partition.get(I, frozenset()) for I in system))
            deepest = max(range(1, k + 1), key=lambda v: len(tree.path(v)))
            label = f"T{j}:" + "-".join(str(v) for v in tree.path(deepest)[:j - 1])
            parts.append(CoverPart(edges, LAMINAR_CATEGORY_UNION, times, label))

    plan = CoverPlan(tuple(parts), l)
    expected = alpha(k, k_prime)
    if plan.ratio != expected:
        raise SolverError(f"laminar cover ratio {plan.ratio} differs from alpha {expected}")
    logger.info(
        f"Laminar cover for k={k}, k'={k_prime}: {plan.m} parts over l={l}",
        extra={'structured_data': {'k': k, 'k_prime': k_prime, 'm': plan.m, 'l': l}}
    )
    return plan


# Forest covers

def _induced_edges(inst: Instance, nodes: FrozenSet[str]) -> int:
    return sum(1 for edge in inst.edges if edge.u in nodes and edge.v in nodes)


@log_performance('forest_cover')
def forest_cover(inst: Instance, m: int, l: int) -> CoverPlan:
    """
    Cover every edge l times with m forests, or prove that none exists.

    Each edge is copied l times and the copies are partitioned into m forests
    by matroid partition with shortest augmenting exchange paths.

    Raises:
        BadArgumentsError: unless m and l are positive
        NonEmptyLaminarSystemError: if degree-sum sets are present
        NoLocalIntervalOrderError: if the subgraphs lack the local-interval property
        SparsityViolationError: with a node set X where l * i(X) > m * (|X| - 1)
    """
    if m < 1 or l < 1:
        raise BadArgumentsError(f"m and l must be positive, got m={m}, l={l}")
    if inst.laminar_sets:
        raise NonEmptyLaminarSystemError("forest covers require an empty degree-sum system")
    local_interval_order(inst)

    elements = [(edge_id, copy) for copy in range(l) for edge_id in inst.edge_ids]
    ends = {element: inst.edge_map[element[0]].endpoints() for element in elements}
    forests = [nx.Graph() for _ in range(m)]
    home: Dict[Tuple[str, int], int] = {}

    def cycle_in(index: int, element) -> Optional[List]:
        u, v = ends[element]
        graph = forests[index]
        if u not in graph or v not in graph or not nx.has_path(graph, u, v):
            return None
        path = nx.shortest_path(graph, u, v)
        return [graph[a][b]['element'] for a, b in zip(path, path[1:])]

    def move(element, index: int):
        if element in home:
            forests[home[element]].remove_edge(*ends[element])
        forests[index].add_edge(*ends[element], element=element)
        home[element] = index

    for start in elements:
        back: Dict[Any, Optional[Tuple[Any, int]]] = {start: None}
        queue = deque([start])
        found = None
        while queue and found is None:
            element = queue.popleft()
            for index in range(m):
                if home.get(element) == index:
                    continue
                cycle = cycle_in(index, element)
                if cycle is None:
                    found = (element, index)
                    break
                for other in cycle:
                    if other not in back:
                        back[other] = (element, index)
                        queue.append(other)
        if found is None:
            raise _sparsity_witness(inst, back, ends, m, l)
        element, index = found
        while True:
            previous = back[element]
            move(element, index)
            if previous is None:
                break
            element, index = previous

    if not all(nx.is_forest(forest) for forest in forests if forest.number_of_edges()):
        raise SolverError("matroid partition produced a cycle")
    parts = tuple(
        CoverPart(frozenset(edge_id for (edge_id, _), index in home.items() if index == i), FOREST, 1, f"F{i + 1}")
        for i in range(m)
    )
    return CoverPlan(parts, l)


def _sparsity_witness(inst: Instance, reached, ends, m: int, l: int) -> SparsityViolationError:
    """Component of the reached copies holding more than m(|X| - 1) of them."""
    graph = nx.MultiGraph()
    for element in reached:
        graph.add_edge(*ends[element])
    for component in sorted(nx.connected_components(graph), key=min):
        copies = graph.subgraph(component).number_of_edges()
        if copies > m * (len(component) - 1):
            nodes = frozenset(component)
            return SparsityViolationError(nodes, _induced_edges(inst, nodes), m, l)
    raise SolverError("no sparsity witness among reached edges")


# Structural covers

def _edge_graph(inst: Instance) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    for edge in inst.edges:
        graph.add_edge(edge.u, edge.v, key=edge.id)
    return graph


def _is_even_cycle(graph: nx.MultiGraph) -> bool:
    return (
        graph.number_of_edges() > 0
        and nx.is_connected(graph)
        and all(degree == 2 for _, degree in graph.degree())
        and graph.number_of_edges() % 2 == 0
    )


def _pseudo_tree_cycle(graph: nx.MultiGraph) -> Optional[List[str]]:
    """Cycle edge ids of a connected graph with exactly one cycle, else None."""
    if graph.number_of_edges() == 0 or not nx.is_connected(graph):
        return None
    if graph.number_of_edges() != graph.number_of_nodes():
        return None
    core = graph.copy()
    leaves = [node for node, degree in core.degree() if degree == 1]
    while leaves:
        node = leaves.pop()
        neighbours = list(core.neighbors(node))
        core.remove_node(node)
        for neighbour in neighbours:
            if core.degree(neighbour) == 1:
                leaves.append(neighbour)
    return sorted(key for _, _, key in core.edges(keys=True))


def _cactus_cycles(inst: Instance) -> Optional[List[List[str]]]:
    """Cycles of a simple graph whose blocks are edges or cycles, else None."""
    by_ends: Dict[FrozenSet[str], str] = {}
    for edge in inst.edges:
        key = frozenset(edge.endpoints())
        if key in by_ends:
            return None
        by_ends[key] = edge.id
    graph = nx.Graph()
    graph.add_edges_from(tuple(key) for key in by_ends)
    cycles = []
    for block in nx.biconnected_component_edges(graph):
        block = list(block)
        nodes = {node for pair in block for node in pair}
        if len(block) == 1:
            continue
        if len(block) != len(nodes):
            return None
        cycles.append(sorted(by_ends[frozenset(pair)] for pair in block))
    return sorted(cycles)


def _is_uniform_b(inst: Instance) -> bool:
    values = {bound for subgraph in inst.subgraphs for bound in subgraph.b.values()}
    return inst.k >= 1 and len(values) <= 1


@log_performance('structural_cover')
def structural_cover(inst: Instance) -> CoverPlan:
    """
    Cover for a recognized shape, tried in order: even cycle, pseudo-tree,
    cactus, uniform degree bounds. Isolated nodes are ignored; the graph
    shapes require an empty degree-sum system.

    Raises:
        NoStructureMatchedError: if no shape applies
    """
    graph = _edge_graph(inst)
    edges = frozenset(inst.edge_ids)
    if not inst.laminar_sets:
        if _is_even_cycle(graph):
            logger.debug("Structure: even cycle")
            return CoverPlan((CoverPart(edges, CYCLE, 1, 'C'),), 1)

        cycle = _pseudo_tree_cycle(graph)
        if cycle is not None:
            m = len(cycle)
            logger.debug(f"Structure: pseudo-tree with cycle length {m}")
            forests = [CoverPart(edges - {edge_id}, FOREST, 1, f"F{i + 1}") for i, edge_id in enumerate(cycle)]
            if m % 2 == 0:
                return CoverPlan((CoverPart(frozenset(cycle), CYCLE, 1, 'C'),) + tuple(forests), m)
            return CoverPlan(tuple(forests), m - 1)

        cycles = _cactus_cycles(inst)
        if cycles is not None:
            if not cycles:
                logger.debug("Structure: forest")
                return CoverPlan((CoverPart(edges, FOREST, 1, 'F1'),), 1)
            m = min(len(cycle) for cycle in cycles)
            logger.debug(f"Structure: cactus with minimum cycle length {m}")
            forests = []
            for i in range(m):
                dropped = {cycle[i] for cycle in cycles}
                forests.append(CoverPart(edges - dropped, FOREST, 1, f"F{i + 1}"))
            return CoverPlan(tuple(forests), m - 1)

    if _is_uniform_b(inst):
        logger.debug("Structure: uniform degree bounds")
        categories = edge_categories(inst)
        parts = [CoverPart(frozenset(e for e, I in categories.items() if len(I) <= 1), SINGLE_SUBGRAPH_UNION, 1, 'z')]
        for index in range(1, inst.k + 1):
            part = frozenset(e for e, I in categories.items() if not I or index in I)
            parts.append(CoverPart(part, SINGLE_SUBGRAPH_UNION, 1, f"x{index}"))
        return CoverPlan(tuple(parts), 2)

    raise NoStructureMatchedError("instance is not an even cycle, pseudo-tree, cactus or uniform-b instance")


def detect_cover(inst: Instance, strategy: str) -> CoverPlan:
    """
    Build a plan from a strategy name: laminar, structural or forest:m,l.

    Raises:
        BadArgumentsError: on an unknown strategy
    """
    if strategy == 'laminar':
        return laminar_cover(inst)
    if strategy == 'structural':
        return structural_cover(inst)
    if strategy.startswith('forest:'):
        try:
            m, l = (int(part) for part in strategy[len('forest:'):].split(','))
        except ValueError as e:
            raise BadArgumentsError(f"forest strategy must look like forest:m,l, got {strategy!r}") from e
        return forest_cover(inst, m, l)
    raise BadArgumentsError(f"unknown cover strategy {strategy!r}")


def cover_systems(k: int, k_prime: int) -> Tuple[List[FrozenSet[FrozenSet[int]]], List[FrozenSet[int]]]:
    """All category systems of depth-limited labeled trees, and the categories to cover."""
    systems = sorted(
        {tree_to_category_system(tree, k, k_prime) for tree in all_labeled_trees(k, k_prime)},
        key=lambda system: sorted(sorted(I) for I in system),
    )
    categories = [
        frozenset(combo)
        for size in range(1, k_prime + 1)
        for combo in itertools.combinations(range(1, k + 1), size)
    ]
    return systems, categories
