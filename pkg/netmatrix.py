"""
Network-matrix solvers: arborescence representations of laminar families,
the bipartite and tree-interval flow network constructions, and an integral
min-cost circulation solver.
"""
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from core import (
    Assignment,
    Instance,
    edge_categories,
    effective_capacities,
    is_infinite,
    is_laminar_family,
    is_locally_laminar,
)
from errors import (
    InfeasibleBoundsError,
    NoLocalIntervalOrderError,
    NonEmptyLaminarSystemError,
    NotBipartiteError,
    NotForestError,
    NotLaminarError,
    NotLocallyLaminarError,
    SidedLaminarViolatedError,
    SolverError,
)
from logger import get_logger, log_performance

logger = get_logger(__name__)

IN, OUT = 'In', 'Out'

RowKey = Tuple[str, ...]
Node = Tuple[Hashable, ...]


@dataclass(frozen=True, eq=False)
class ArborescenceRep:
    """
    Directed tree whose arcs stand for the sets of a laminar family.

    With orientation Out arcs point away from the root; with In they point
    towards it. For every ground element u the arcs between the root and
    phi[u] are exactly the sets containing u.
    """
    root: Hashable
    nodes: Tuple[Hashable, ...]
    arcs: Tuple[Tuple[Hashable, Hashable], ...]
    phi: Mapping[Hashable, Hashable]
    arc_to_set: Mapping[Tuple[Hashable, Hashable], str]
    parent: Mapping[Hashable, Hashable]
    orientation: str = OUT

    def path_sets(self, element) -> List[str]:
        """Set ids on the path between phi(element) and the root, innermost first."""
        sets = []
        node = self.phi[element]
        while node != self.root:
            up = self.parent[node]
            arc = (up, node) if self.orientation == OUT else (node, up)
            sets.append(self.arc_to_set[arc])
            node = up
        return sets


def arborescence_representation(family: Mapping[str, FrozenSet], orientation: str = OUT,
                                root: Hashable = 'r', ground: Iterable = ()) -> ArborescenceRep:
    """
    Build the arborescence representation of a laminar family.

    Sets are processed by decreasing size (ties by id); each set hangs below
    the innermost set already containing it, so equal sets form a chain.

    Args:
        family: set id to member set
        orientation: Out (arcs away from the root) or In
        root: name of the root node; set nodes are named by their ids
        ground: extra elements to map to the root when no set contains them

    Raises:
        NotLaminarError: if two sets cross
    """
    ids = sorted(family)
    crossing = is_laminar_family([frozenset(family[i]) for i in ids])
    if crossing is not None:
        raise NotLaminarError(ids[crossing[0]], ids[crossing[1]])

    order = sorted(ids, key=lambda i: (-len(family[i]), i))
    owner: Dict[Hashable, str] = {}
    parent: Dict[Hashable, Hashable] = {}
    arcs = []
    arc_to_set = {}
    for set_id in order:
        members = family[set_id]
        containers = {owner.get(u) for u in members}
        container = next(iter(containers)) if containers else None
        up = root if container is None else container
        parent[set_id] = up
        arc = (up, set_id) if orientation == OUT else (set_id, up)
        arcs.append(arc)
        arc_to_set[arc] = set_id
        for u in members:
            owner[u] = set_id

    phi = {u: root for u in ground}
    phi.update(owner)
    return ArborescenceRep(
        root=root,
        nodes=(root,) + tuple(order),
        arcs=tuple(arcs),
        phi=phi,
        arc_to_set=arc_to_set,
        parent=parent,
        orientation=orientation,
    )


@dataclass(frozen=True)
class Arc:
    id: str
    tail: Node
    head: Node
    lower: int
    upper: int
    cost: int = 0
    rows: Tuple[RowKey, ...] = ()
    edge: Optional[str] = None


@dataclass(frozen=True, eq=False)
class FlowNetwork:
    """Directed tree of constraint arcs plus one non-tree arc per instance edge."""
    instance: Instance
    kind: str
    nodes: Tuple[Node, ...]
    tree_arcs: Tuple[Arc, ...]
    nontree_arcs: Tuple[Arc, ...]
    metadata: Mapping[str, object] = field(default_factory=dict)

    @property
    def arcs(self) -> Tuple[Arc, ...]:
        return self.tree_arcs + self.nontree_arcs

    @property
    def arc_to_row(self) -> Dict[str, Tuple[RowKey, ...]]:
        return {arc.id: arc.rows for arc in self.tree_arcs}

    @property
    def arc_to_edge(self) -> Dict[str, str]:
        return {arc.id: arc.edge for arc in self.nontree_arcs}


def _expected_rows(inst: Instance, edge_id: str) -> FrozenSet[RowKey]:
    edge = inst.edge_map[edge_id]
    rows = set()
    for subgraph in inst.subgraphs:
        if edge_id in subgraph.edge_ids:
            rows.add(('deg', subgraph.id, edge.u))
            rows.add(('deg', subgraph.id, edge.v))
    for lam in inst.laminar_sets:
        if edge.u in lam.node_ids or edge.v in lam.node_ids:
            rows.add(('sum', lam.id))
    return frozenset(rows)


def check_network_fidelity(net: FlowNetwork) -> List[str]:
    """
    Verify the network matrix against the instance rows.

    For every non-tree arc the tree path from its head back to its tail must
    use tree arcs forwards only, and the rows carried by those arcs must be
    exactly the rows in which the edge has a nonzero entry.

    Returns:
        Descriptions of every mismatch; empty when the network is faithful
    """
    tree = nx.DiGraph()
    tree.add_nodes_from(net.nodes)
    for arc in net.tree_arcs:
        tree.add_edge(arc.tail, arc.head, arc=arc)
    problems = []
    if net.nodes and not nx.is_tree(tree):
        problems.append("tree arcs do not form a tree")
        return problems
    undirected = tree.to_undirected(as_view=True)
    for arc in net.nontree_arcs:
        path = nx.shortest_path(undirected, arc.head, arc.tail)
        rows = set()
        for a, b in zip(path, path[1:]):
            if not tree.has_edge(a, b):
                problems.append(f"edge {arc.edge}: tree arc {b}->{a} used backwards")
                continue
            rows.update(tree[a][b]['arc'].rows)
        expected = _expected_rows(net.instance, arc.edge)
        if rows != expected:
            problems.append(f"edge {arc.edge}: cycle rows {sorted(rows)} != {sorted(expected)}")
    return problems


def _finish(inst: Instance, kind: str, nodes: List[Node], tree_arcs: List[Arc],
            nontree_arcs: List[Arc], **metadata) -> FlowNetwork:
    net = FlowNetwork(
        instance=inst,
        kind=kind,
        nodes=tuple(nodes),
        tree_arcs=tuple(tree_arcs),
        nontree_arcs=tuple(nontree_arcs),
        metadata=metadata,
    )
    problems = check_network_fidelity(net)
    if problems:
        raise SolverError(f"{kind} network is not faithful: {problems[0]}")
    logger.debug(f"Built {kind} network with {len(tree_arcs)} tree arcs and {len(nontree_arcs)} edges")
    return net


def _distinct_traces(inst: Instance, node: str) -> Dict[FrozenSet[str], Tuple[int, Tuple[RowKey, ...]]]:
    """Distinct nonempty traces at a node with the tightest bound and their row keys."""
    traces: Dict[FrozenSet[str], Tuple[int, List[RowKey]]] = {}
    for subgraph in inst.subgraphs:
        trace = inst.trace(subgraph, node)
        if not trace:
            continue
        bound, keys = traces.get(trace, (subgraph.b[node], []))
        traces[trace] = (min(bound, subgraph.b[node]), keys + [('deg', subgraph.id, node)])
    return {trace: (bound, tuple(keys)) for trace, (bound, keys) in traces.items()}


def bipartition(inst: Instance) -> Tuple[FrozenSet[str], FrozenSet[str]]:
    """
    Sides S and T of a bipartite instance; in every component the
    lexicographically smallest node goes to S.

    Raises:
        NotBipartiteError: if the graph has an odd cycle
    """
    graph = nx.MultiGraph()
    graph.add_nodes_from(inst.nodes)
    graph.add_edges_from((edge.u, edge.v) for edge in inst.edges)
    if not nx.is_bipartite(graph):
        raise NotBipartiteError("graph contains an odd cycle")
    S, T = set(), set()
    for component in nx.connected_components(graph):
        for depth, layer in enumerate(nx.bfs_layers(graph, min(component))):
            (S if depth % 2 == 0 else T).update(layer)
    return frozenset(S), frozenset(T)


@log_performance('build_bipartite_network')
def build_bipartite_network(inst: Instance, S: Optional[Iterable[str]] = None,
                            T: Optional[Iterable[str]] = None) -> FlowNetwork:
    """
    Flow network of a bipartite, locally laminar instance with sided L.

    S-side trace families and degree-sum sets are In-arborescences, T-side
    ones Out-arborescences, all hanging from a hub node; the edge st becomes
    a non-tree arc from phi_t(st) to phi_s(st).

    Args:
        inst: a validated instance
        S, T: the bipartition; derived from the graph when omitted

    Raises:
        NotBipartiteError: if some edge does not join S and T
        NotLocallyLaminarError: if traces cross at some node
        SidedLaminarViolatedError: if a degree-sum set meets both sides
    """
    if S is None or T is None:
        S, T = bipartition(inst)
    S, T = frozenset(S), frozenset(T)
    if S & T:
        raise NotBipartiteError(f"sides overlap in {sorted(S & T)}")
    for edge in inst.edges:
        if not ((edge.u in S and edge.v in T) or (edge.u in T and edge.v in S)):
            raise NotBipartiteError(f"edge {edge.id} does not join the two sides")
    report = is_locally_laminar(inst)
    if not report:
        raise NotLocallyLaminarError(report.witness)
    for lam in inst.laminar_sets:
        if not (lam.node_ids <= S or lam.node_ids <= T):
            raise SidedLaminarViolatedError(lam.id)

    caps = effective_capacities(inst)
    big = sum(caps.values())
    hub: Node = ('hub',)
    nodes: List[Node] = [hub]
    tree_arcs: List[Arc] = []
    phi: Dict[Tuple[str, str], Node] = {}

    def finite(bound) -> int:
        return big if bound is None or is_infinite(bound) else min(bound, big)

    for node in inst.nodes:
        nodes.append(('node', node))
    for node in sorted(inst.incidence):
        side_in = node in S
        traces = _distinct_traces(inst, node)
        names = {trace: "{" + ",".join(sorted(trace)) + "}" for trace in traces}
        rep = arborescence_representation(
            {names[t]: t for t in traces},
            orientation=IN if side_in else OUT,
            root=('node', node),
        )
        for tail, head in rep.arcs:
            set_name = rep.arc_to_set[(tail, head)]
            trace = next(t for t in traces if names[t] == set_name)
            bound, keys = traces[trace]

            def lift(n):
                return n if n == ('node', node) else ('trace', node, n)

            nodes.append(('trace', node, set_name))
            tree_arcs.append(Arc(
                id=f"deg:{node}:{set_name}",
                tail=lift(tail),
                head=lift(head),
                lower=0,
                upper=finite(bound),
                rows=keys,
            ))
        for edge_id in inst.incidence[node]:
            target = rep.phi.get(edge_id, rep.root)
            phi[(node, edge_id)] = target if target == ('node', node) else ('trace', node, target)

    for side, orientation in ((S, IN), (T, OUT)):
        groups: Dict[FrozenSet[str], List] = {}
        for lam in inst.laminar_sets:
            if lam.node_ids <= side:
                groups.setdefault(frozenset(lam.node_ids), []).append(lam)
        for node in side:
            if node in inst.incidence:
                groups.setdefault(frozenset([node]), [])
        names = {nodes_: "{" + ",".join(sorted(nodes_)) + "}" for nodes_ in groups}
        rep = arborescence_representation(
            {names[s]: s for s in groups},
            orientation=orientation,
            root=hub,
        )

        def place(n):
            if n == hub:
                return hub
            members = next(s for s in groups if names[s] == n)
            if len(members) == 1:
                return ('node', next(iter(members)))
            return ('set', n)

        for tail, head in rep.arcs:
            set_name = rep.arc_to_set[(tail, head)]
            members = next(s for s in groups if names[s] == set_name)
            lams = groups[members]
            bounds = [lam.g for lam in lams if not is_infinite(lam.g)]
            if len(members) > 1:
                nodes.append(('set', set_name))
            tree_arcs.append(Arc(
                id=f"sum:{set_name}",
                tail=place(tail),
                head=place(head),
                lower=0,
                upper=finite(min(bounds) if bounds else None),
                rows=tuple(('sum', lam.id) for lam in sorted(lams, key=lambda lam: lam.id)),
            ))

    # Isolated nodes stay attached to the tree with a dead arc.
    attached = {arc.tail for arc in tree_arcs} | {arc.head for arc in tree_arcs}
    for node in inst.nodes:
        if ('node', node) not in attached:
            tree_arcs.append(Arc(id=f"idle:{node}", tail=hub, head=('node', node), lower=0, upper=0))

    nontree_arcs = []
    for edge in sorted(inst.edges, key=lambda e: e.id):
        s, t = (edge.u, edge.v) if edge.u in S else (edge.v, edge.u)
        nontree_arcs.append(Arc(
            id=f"edge:{edge.id}",
            tail=phi[(t, edge.id)],
            head=phi[(s, edge.id)],
            lower=0,
            upper=caps[edge.id],
            cost=-edge.w,
            edge=edge.id,
        ))
    return _finish(inst, 'bipartite', list(dict.fromkeys(nodes)), tree_arcs, nontree_arcs,
                   S=sorted(S), T=sorted(T))


# Local interval orders

def _interval_order(columns: Sequence[int], rows: Sequence[FrozenSet[int]]) -> Optional[List[int]]:
    """
    Smallest ordering (lexicographically) of columns in which every row is a
    contiguous block, by backtracking with memoized dead ends.
    """
    failed = set()

    def extend(placed: List[int], open_rows: FrozenSet[int], closed: FrozenSet[int]) -> Optional[List[int]]:
        if len(placed) == len(columns):
            return placed
        state = (frozenset(placed), open_rows)
        if state in failed:
            return None
        placed_set = set(placed)
        for column in columns:
            if column in placed_set:
                continue
            ok = True
            new_open, new_closed = set(open_rows), set(closed)
            for r, members in enumerate(rows):
                if column in members:
                    if r in closed:
                        ok = False
                        break
                    new_open.add(r)
                elif r in open_rows:
                    if not members <= placed_set:
                        ok = False
                        break
                    new_open.discard(r)
                    new_closed.add(r)
            if not ok:
                continue
            for r in list(new_open):
                if rows[r] <= placed_set | {column}:
                    new_open.discard(r)
                    new_closed.add(r)
            result = extend(placed + [column], frozenset(new_open), frozenset(new_closed))
            if result is not None:
                return result
        failed.add(state)
        return None

    return extend([], frozenset(), frozenset())


def local_interval_order(inst: Instance) -> Dict[str, Tuple[int, ...]]:
    """
    Per node, an ordering of all subgraph indices (0-based) in which every
    incident edge's membership set is an interval.

    Raises:
        NoLocalIntervalOrderError: at the first node with no such ordering
    """
    categories = edge_categories(inst)
    orders = {}
    for node in sorted(inst.incidence):
        rows = sorted({frozenset(i - 1 for i in categories[e]) for e in inst.incidence[node]} - {frozenset()},
                      key=sorted)
        relevant = sorted(set().union(*rows)) if rows else []
        found = _interval_order(relevant, rows)
        if found is None:
            raise NoLocalIntervalOrderError(node)
        rest = [i for i in range(inst.k) if i not in set(relevant)]
        orders[node] = tuple(found + rest)
    return orders


def has_local_interval_property(inst: Instance) -> bool:
    try:
        local_interval_order(inst)
    except NoLocalIntervalOrderError:
        return False
    return True


def is_forest(inst: Instance) -> bool:
    graph = nx.MultiGraph()
    graph.add_nodes_from(inst.nodes)
    graph.add_edges_from((edge.u, edge.v) for edge in inst.edges)
    return all(
        graph.subgraph(component).number_of_edges() == len(component) - 1
        for component in nx.connected_components(graph)
    )


@log_performance('build_tree_interval_network')
def build_tree_interval_network(inst: Instance) -> FlowNetwork:
    """
    Flow network of a forest instance with the local-interval property.

    Every node v gets a chain z^v_0 -> ... -> z^v_k whose j-th arc is the
    degree row of the j-th subgraph in v's interval order. Each component is
    rooted at its smallest node; for an edge from parent u to child v with
    membership positions [p, q] at each end, z^u_q is unified with
    z^v_(p-1) and the non-tree arc runs from z^v_q to z^u_(p-1).

    Raises:
        NotForestError: if the graph has a cycle
        NonEmptyLaminarSystemError: if degree-sum sets are present
        NoLocalIntervalOrderError: if some node has no interval order
    """
    if not is_forest(inst):
        raise NotForestError("graph contains a cycle")
    if inst.laminar_sets:
        raise NonEmptyLaminarSystemError("tree-interval networks require an empty degree-sum system")
    orders = local_interval_order(inst)
    caps = effective_capacities(inst)
    big = sum(caps.values())
    k = inst.k
    categories = edge_categories(inst)

    positions = {
        node: {index: j + 1 for j, index in enumerate(order)}
        for node, order in orders.items()
    }

    def interval(node: str, edge_id: str) -> Tuple[int, int]:
        members = [positions[node][i - 1] for i in categories[edge_id]]
        if not members:
            return (1, 0)
        return (min(members), max(members))

    # Union-find over chain nodes.
    leader: Dict[Node, Node] = {}

    def find(n: Node) -> Node:
        while leader.get(n, n) != n:
            leader[n] = leader.get(leader[n], leader[n])
            n = leader[n]
        return n

    def union(a: Node, b: Node):
        ra, rb = find(a), find(b)
        if ra != rb:
            keep, drop = (ra, rb) if ra <= rb else (rb, ra)
            leader[drop] = keep

    graph = nx.MultiGraph()
    graph.add_nodes_from(inst.nodes)
    edge_between: Dict[FrozenSet[str], str] = {}
    for edge in inst.edges:
        graph.add_edge(edge.u, edge.v)
        edge_between[frozenset((edge.u, edge.v))] = edge.id

    pending = []
    roots = []
    for component in sorted(nx.connected_components(graph), key=min):
        root = min(component)
        roots.append(root)
        for u, v in nx.bfs_edges(graph, root, sort_neighbors=sorted):
            edge_id = edge_between[frozenset((u, v))]
            p_u, q_u = interval(u, edge_id) if u in positions else (1, 0)
            p_v, q_v = interval(v, edge_id) if v in positions else (1, 0)
            union(('chain', u, q_u), ('chain', v, p_v - 1))
            pending.append((edge_id, ('chain', v, q_v), ('chain', u, p_u - 1)))

    top: Node = ('root',)
    nodes: List[Node] = [top]
    tree_arcs: List[Arc] = []
    for node in inst.nodes:
        order = orders.get(node, tuple(range(k)))
        for j in range(k + 1):
            rep = find(('chain', node, j))
            if rep not in nodes:
                nodes.append(rep)
        for j, index in enumerate(order, start=1):
            subgraph = inst.subgraphs[index]
            present = node in subgraph.b
            tree_arcs.append(Arc(
                id=f"deg:{node}:{j}",
                tail=find(('chain', node, j - 1)),
                head=find(('chain', node, j)),
                lower=0,
                upper=min(subgraph.b[node], big) if present else 0,
                rows=(('deg', subgraph.id, node),) if present else (),
            ))
    for root in roots:
        tree_arcs.append(Arc(id=f"root:{root}", tail=top, head=find(('chain', root, 0)), lower=0, upper=0))

    nontree_arcs = [
        Arc(
            id=f"edge:{edge_id}",
            tail=find(tail),
            head=find(head),
            lower=0,
            upper=caps[edge_id],
            cost=-inst.edge_map[edge_id].w,
            edge=edge_id,
        )
        for edge_id, tail, head in sorted(pending)
    ]
    return _finish(inst, 'tree-interval', nodes, tree_arcs, nontree_arcs,
                   orders={node: list(order) for node, order in orders.items()})


# Circulation

@log_performance('min_cost_circulation')
def min_cost_circulation(net: FlowNetwork) -> Dict[str, int]:
    """
    Integral minimum cost circulation solved with networkx.network_simplex,
    not successive shortest augmenting paths. Both return an integral
    optimum on integral bounds, so the circulation cost is the same.

    Lower bounds are moved into node demands, so every arc carries its
    lower bound plus the flow found on the shifted network.

    Returns:
        Flow per arc id

    Raises:
        InfeasibleBoundsError: if no circulation meets the arc bounds
    """
    graph = nx.MultiDiGraph()
    graph.add_nodes_from(net.nodes, demand=0)
    for arc in net.arcs:
        if arc.lower > arc.upper:
            raise InfeasibleBoundsError(f"arc {arc.id} has lower bound above upper bound")
        for end in (arc.tail, arc.head):
            if end not in graph:
                graph.add_node(end, demand=0)
        graph.add_edge(arc.tail, arc.head, key=arc.id, capacity=arc.upper - arc.lower, weight=arc.cost)
        if arc.lower and arc.tail != arc.head:
            graph.nodes[arc.tail]['demand'] += arc.lower
            graph.nodes[arc.head]['demand'] -= arc.lower

    if not graph.number_of_nodes():
        return {}
    try:
        _, shifted = nx.network_simplex(graph)
    except nx.NetworkXUnfeasible as e:
        raise InfeasibleBoundsError(f"no circulation meets the arc bounds: {e}") from e
    return {
        arc.id: arc.lower + shifted.get(arc.tail, {}).get(arc.head, {}).get(arc.id, 0)
        for arc in net.arcs
    }


def circulation_cost(net: FlowNetwork, flow: Mapping[str, int]) -> int:
    return sum(arc.cost * flow[arc.id] for arc in net.arcs)


def decode_flow(net: FlowNetwork, flow: Mapping[str, int]) -> Assignment:
    """Read x_e off the non-tree arc of each edge."""
    return Assignment.from_values(net.instance, {arc.edge: flow.get(arc.id, 0) for arc in net.nontree_arcs})


def solve_network(net: FlowNetwork) -> Assignment:
    """Maximum weight assignment of a network-matrix instance."""
    return decode_flow(net, min_cost_circulation(net))


def _dot_id(node: Node) -> str:
    text = "/".join(str(part) for part in node)
    return '"' + text.replace('\\', '\\\\').replace('"', '\\"') + '"'


def to_dot(net: FlowNetwork) -> str:
    """DOT rendering: tree arcs solid with their rows, edge arcs dashed."""
    lines = [f"digraph {net.kind.replace('-', '_')} {{", "  rankdir=LR;"]
    for node in net.nodes:
        lines.append(f"  {_dot_id(node)};")
    for arc in net.tree_arcs:
        rows = ",".join(":".join(key) for key in arc.rows) or "-"
        lines.append(f'  {_dot_id(arc.tail)} -> {_dot_id(arc.head)} [label="{rows} [{arc.lower},{arc.upper}]"];')
    for arc in net.nontree_arcs:
        lines.append(
            f'  {_dot_id(arc.tail)} -> {_dot_id(arc.head)} '
            f'[style=dashed, label="{arc.edge} w={-arc.cost} c={arc.upper}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
