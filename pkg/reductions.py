"""
3-dimensional matching instances and the generators that turn them into
simultaneous assignment instances, plus the way back from assignments to matchings.
"""
import itertools
import random
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from core import Assignment, Edge, Instance, LaminarConstraint, SubgraphConstraint, is_feasible, validate_instance
from errors import BadArgumentsError, InfeasibleSolutionError, InstanceSyntaxError, NotTwoRegularError
from logger import get_logger

logger = get_logger(__name__)

Triple = Tuple[str, str, str]


@dataclass(frozen=True)
class ThreeDMInstance:
    X: Tuple[str, ...]
    Y: Tuple[str, ...]
    Z: Tuple[str, ...]
    triples: Tuple[Triple, ...]

    def occurrences(self) -> Dict[str, List[int]]:
        """Element to the 1-based indices of the triples containing it."""
        found: Dict[str, List[int]] = {element: [] for element in self.X + self.Y + self.Z}
        for index, triple in enumerate(self.triples, start=1):
            for element in triple:
                found.setdefault(element, []).append(index)
        return found

    def check_two_regular(self):
        """
        Raises:
            NotTwoRegularError: unless every element occurs in exactly two triples
        """
        if not self.triples:
            raise NotTwoRegularError()
        for element, indices in self.occurrences().items():
            if len(indices) != 2:
                raise NotTwoRegularError(element)

    def is_matching(self, chosen: Iterable[Triple]) -> bool:
        chosen = list(chosen)
        return all(len({triple[axis] for triple in chosen}) == len(chosen) for axis in range(3))


def parse_3dm(text: str) -> ThreeDMInstance:
    """
    Read the text format: three lines listing X, Y and Z, then one
    whitespace-separated triple per line. Blank lines and '#' comments are skipped.

    Raises:
        InstanceSyntaxError: on malformed input
    """
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if line:
            lines.append((number, line.split()))
    if len(lines) < 3:
        raise InstanceSyntaxError("3DM input needs three header lines for X, Y and Z")
    X, Y, Z = (tuple(tokens) for _, tokens in lines[:3])
    sides = (set(X), set(Y), set(Z))
    if len(sides[0] | sides[1] | sides[2]) != len(X) + len(Y) + len(Z):
        raise InstanceSyntaxError("X, Y and Z must be disjoint and free of repeats")
    triples = []
    for number, tokens in lines[3:]:
        if len(tokens) != 3:
            raise InstanceSyntaxError(f"line {number}: expected a triple, got {len(tokens)} field(s)")
        for axis, token in enumerate(tokens):
            if token not in sides[axis]:
                raise InstanceSyntaxError(f"line {number}: {token} is not an element of {'XYZ'[axis]}")
        triples.append(tuple(tokens))
    return ThreeDMInstance(X, Y, Z, tuple(triples))


def serialize_3dm(tdm: ThreeDMInstance) -> str:
    lines = [" ".join(tdm.X), " ".join(tdm.Y), " ".join(tdm.Z)]
    lines.extend(" ".join(triple) for triple in tdm.triples)
    return "\n".join(lines) + "\n"


def random_two_regular(n: int, seed: Optional[int] = None) -> ThreeDMInstance:
    """
    Random 2-regular instance with |X| = |Y| = |Z| = n and 2n distinct triples,
    pairing two copies of each X element with shuffled copies of Y and Z.

    Raises:
        BadArgumentsError: if n < 2
    """
    if n < 2:
        raise BadArgumentsError(f"2-regular instances with distinct triples need n >= 2, got {n}")
    rng = random.Random(seed)
    X = tuple(f"x{i}" for i in range(1, n + 1))
    Y = tuple(f"y{i}" for i in range(1, n + 1))
    Z = tuple(f"z{i}" for i in range(1, n + 1))
    xs = [x for x in X for _ in range(2)]
    while True:
        ys = [y for y in Y for _ in range(2)]
        zs = [z for z in Z for _ in range(2)]
        rng.shuffle(ys)
        rng.shuffle(zs)
        triples = tuple(zip(xs, ys, zs))
        if len(set(triples)) == len(triples):
            return ThreeDMInstance(X, Y, Z, triples)


def max_3dm(tdm: ThreeDMInstance) -> List[Triple]:
    """Largest matching by exhaustive search, earliest triples preferred."""
    best: List[int] = []
    used: List[set] = [set(), set(), set()]
    chosen: List[int] = []

    def search(position: int):
        nonlocal best
        if len(chosen) + len(tdm.triples) - position <= len(best):
            return
        if position == len(tdm.triples):
            best = list(chosen)
            return
        triple = tdm.triples[position]
        if all(triple[axis] not in used[axis] for axis in range(3)):
            for axis in range(3):
                used[axis].add(triple[axis])
            chosen.append(position)
            search(position + 1)
            chosen.pop()
            for axis in range(3):
                used[axis].discard(triple[axis])
        search(position + 1)

    search(0)
    return [tdm.triples[i] for i in best]


def _by_z(tdm: ThreeDMInstance) -> Dict[str, Tuple[int, int]]:
    occurrences = tdm.occurrences()
    return {z: tuple(occurrences[z]) for z in tdm.Z}


def _subgraph(sid: str, edges: Sequence[Edge]) -> SubgraphConstraint:
    return SubgraphConstraint(
        id=sid,
        edge_ids=frozenset(edge.id for edge in edges),
        b={node: 1 for edge in edges for node in edge.endpoints()},
    )


def gen_unweighted(tdm: ThreeDMInstance, split_claws: bool = False) -> Instance:
    """
    Unweighted bipartite instance whose optimum is |E| + (largest matching).

    Every triple i becomes an S-node eS:i and a T-node eT:i joined by ee:i;
    x and y are joined to the T-nodes of their triples. H1 holds the edges at
    X and eS, H2 those at Y and eS, all bounds 1, and the two T-nodes of each
    z form a degree-sum set with bound 3. With split_claws every x and y node
    hands the edge of its later triple to a copy, and the pair gets a
    degree-sum bound of 1, leaving only claws.

    Raises:
        NotTwoRegularError: unless tdm is 2-regular
    """
    tdm.check_two_regular()
    occurrences = tdm.occurrences()
    indices = range(1, len(tdm.triples) + 1)

    def end(element: str, prefix: str, index: int) -> str:
        node = f"{prefix}:{element}"
        if split_claws and occurrences[element][1] == index:
            return node + "#2"
        return node

    nodes: List[str] = []
    for prefix, elements in (('x', tdm.X), ('eS', None), ('y', tdm.Y), ('eT', None)):
        if elements is None:
            nodes.extend(f"{prefix}:{i}" for i in indices)
            continue
        for element in elements:
            nodes.append(f"{prefix}:{element}")
            if split_claws:
                nodes.append(f"{prefix}:{element}#2")

    edges, first, second = [], [], []
    for i, (x, y, _) in zip(indices, tdm.triples):
        ex = Edge(f"ex:{i}", end(x, 'x', i), f"eT:{i}", 1)
        ey = Edge(f"ey:{i}", end(y, 'y', i), f"eT:{i}", 1)
        ee = Edge(f"ee:{i}", f"eS:{i}", f"eT:{i}", 1)
        edges.extend([ex, ey, ee])
        first.extend([ex, ee])
        second.extend([ey, ee])

    laminar = [
        LaminarConstraint(f"z:{z}", frozenset(f"eT:{i}" for i in pair), 3)
        for z, pair in _by_z(tdm).items()
    ]
    if split_claws:
        for prefix, elements in (('x', tdm.X), ('y', tdm.Y)):
            for element in elements:
                node = f"{prefix}:{element}"
                laminar.append(LaminarConstraint(f"split:{node}", frozenset([node, node + "#2"]), 1))

    inst = Instance(
        nodes=tuple(nodes),
        edges=tuple(edges),
        subgraphs=(_subgraph('H1', first), _subgraph('H2', second)),
        laminar_sets=tuple(laminar),
    )
    logger.debug(f"Generated unweighted instance with {len(edges)} edges (split_claws={split_claws})")
    return validate_instance(inst)


def gen_weighted(tdm: ThreeDMInstance) -> Instance:
    """
    Weighted instance without degree-sum sets whose optimum is 3|Z| + (largest matching).

    For each z with triples i1 < i2: weight-2 edges w2a:z (eS:i2 to eT:i1) and
    w2b:z (eS:i2 to eT:i2), and a weight-1 edge e1:z (eS:i1 to eT:i1).

    Raises:
        NotTwoRegularError: unless tdm is 2-regular
    """
    tdm.check_two_regular()
    indices = range(1, len(tdm.triples) + 1)
    nodes = (
        [f"x:{x}" for x in tdm.X]
        + [f"eS:{i}" for i in indices]
        + [f"y:{y}" for y in tdm.Y]
        + [f"eT:{i}" for i in indices]
    )
    edges, first, second = [], [], []
    for i, (x, y, _) in zip(indices, tdm.triples):
        ex = Edge(f"ex:{i}", f"x:{x}", f"eT:{i}", 1)
        ey = Edge(f"ey:{i}", f"y:{y}", f"eT:{i}", 1)
        edges.extend([ex, ey])
        first.append(ex)
        second.append(ey)
    for z, (i1, i2) in _by_z(tdm).items():
        connectors = [
            Edge(f"w2a:{z}", f"eS:{i2}", f"eT:{i1}", 2),
            Edge(f"w2b:{z}", f"eS:{i2}", f"eT:{i2}", 2),
            Edge(f"e1:{z}", f"eS:{i1}", f"eT:{i1}", 1),
        ]
        edges.extend(connectors)
        first.extend(connectors)
        second.extend(connectors)

    inst = Instance(
        nodes=tuple(nodes),
        edges=tuple(edges),
        subgraphs=(_subgraph('H1', first), _subgraph('H2', second)),
    )
    logger.debug(f"Generated weighted instance with {len(edges)} edges")
    return validate_instance(inst)


def extract_3dm(tdm: ThreeDMInstance, solution: Union[Assignment, Mapping[str, int]],
                weighted: bool = False, split_claws: bool = False) -> List[Triple]:
    """
    Read a matching off an assignment of a generated instance.

    Triple i is chosen when eT:i carries both its x and its y edge. In the
    weighted construction both triples of one z may qualify; the earlier one
    is kept.

    Raises:
        InfeasibleSolutionError: if the assignment violates the generated instance
    """
    inst = gen_weighted(tdm) if weighted else gen_unweighted(tdm, split_claws)
    violations = is_feasible(inst, solution)
    if violations:
        raise InfeasibleSolutionError(violations)
    x = solution.x if isinstance(solution, Assignment) else solution
    chosen = {
        i for i in range(1, len(tdm.triples) + 1)
        if x.get(f"ex:{i}", 0) > 0 and x.get(f"ey:{i}", 0) > 0
    }
    for i1, i2 in _by_z(tdm).values():
        if i1 in chosen and i2 in chosen:
            chosen.discard(i2)
    matching = [tdm.triples[i - 1] for i in sorted(chosen)]
    if not tdm.is_matching(matching):
        raise InfeasibleSolutionError([f"triples {sorted(chosen)} overlap"])
    return matching


def all_two_regular(n: int) -> Iterable[ThreeDMInstance]:
    """Every 2-regular instance on n elements per side, up to the order of triples."""
    X = tuple(f"x{i}" for i in range(1, n + 1))
    Y = tuple(f"y{i}" for i in range(1, n + 1))
    Z = tuple(f"z{i}" for i in range(1, n + 1))
    xs = [x for x in X for _ in range(2)]
    seen = set()
    for ys in sorted(set(itertools.permutations([y for y in Y for _ in range(2)]))):
        for zs in sorted(set(itertools.permutations([z for z in Z for _ in range(2)]))):
            triples = tuple(zip(xs, ys, zs))
            key = tuple(sorted(triples))
            if len(set(triples)) != len(triples) or key in seen:
                continue
            seen.add(key)
            yield ThreeDMInstance(X, Y, Z, key)
