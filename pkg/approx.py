"""
Cover-based approximation: solve every part of a cover exactly and keep the
heaviest solution. Also measures integrality gaps against exact optima.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx

from config import APPROX_WORKERS
from core import (
    Assignment,
    Edge,
    Instance,
    LaminarConstraint,
    bound_min,
    is_feasible,
    is_locally_laminar,
    restrict,
)
from covers import CYCLE, FOREST, LAMINAR_CATEGORY_UNION, CoverPlan, verify_plan
from errors import (
    BadArgumentsError,
    NoLocalIntervalOrderError,
    NotBipartiteError,
    SidedLaminarViolatedError,
    SolverError,
    TooLargeError,
    ZeroIntegerOptimumError,
)
from exact import branch_and_bound_opt, brute_force_opt
from logger import get_logger, log_performance
from lp import build_lp1, build_lp1_star, simplex_solve
from netmatrix import (
    bipartition,
    build_bipartite_network,
    build_tree_interval_network,
    is_forest,
    local_interval_order,
    solve_network,
)

logger = get_logger(__name__)

METHOD_EMPTY = 'empty'
METHOD_BIPARTITE = 'network:bipartite'
METHOD_TREE = 'network:tree-interval'
METHOD_EVEN_CYCLE = 'network:even-cycle'
METHOD_BNB = 'branch-and-bound'


def _graph(inst: Instance) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    graph.add_edges_from((edge.u, edge.v) for edge in inst.edges)
    return graph


def _bipartite_applies(inst: Instance) -> bool:
    try:
        S, T = bipartition(inst)
    except NotBipartiteError:
        return False
    if not is_locally_laminar(inst):
        return False
    return all(lam.node_ids <= S or lam.node_ids <= T for lam in inst.laminar_sets)


def _tree_applies(inst: Instance) -> bool:
    if inst.laminar_sets or not is_forest(inst):
        return False
    try:
        local_interval_order(inst)
    except NoLocalIntervalOrderError:
        return False
    return True


def _even_cycle_applies(inst: Instance) -> bool:
    graph = _graph(inst)
    return (
        not inst.laminar_sets
        and graph.number_of_edges() > 0
        and graph.number_of_edges() % 2 == 0
        and nx.is_connected(graph)
        and all(degree == 2 for _, degree in graph.degree())
    )


def even_cycle_reduction(inst: Instance) -> Instance:
    """
    Equivalent b-matching on an even cycle: a subgraph holding one edge at a
    node tightens that edge's capacity, one holding both becomes a degree-sum
    bound on the node. Only the most restrictive bound per node survives.
    """
    capacity = {edge.id: edge.c for edge in inst.edges}
    node_bound: Dict[str, List] = {}
    for subgraph in inst.subgraphs:
        for node, bound in subgraph.b.items():
            trace = inst.trace(subgraph, node)
            if len(trace) == 1:
                edge_id = next(iter(trace))
                capacity[edge_id] = bound_min([capacity[edge_id], bound])
            elif len(trace) == 2:
                node_bound.setdefault(node, []).append(bound)
    edges = tuple(
        Edge(id=edge.id, u=edge.u, v=edge.v, w=edge.w, c=capacity[edge.id])
        for edge in inst.edges
    )
    laminar = tuple(
        LaminarConstraint(id=f"deg:{node}", node_ids=frozenset([node]), g=min(bounds))
        for node, bounds in sorted(node_bound.items())
    )
    return Instance(nodes=inst.nodes, edges=edges, subgraphs=(), laminar_sets=laminar)


def applicable_methods(inst: Instance, kind: Optional[str] = None) -> List[str]:
    """Exact methods that apply to an instance, preferred first for the part kind."""
    if not inst.edges:
        return [METHOD_EMPTY]
    checks = [
        (METHOD_BIPARTITE, _bipartite_applies),
        (METHOD_TREE, _tree_applies),
        (METHOD_EVEN_CYCLE, _even_cycle_applies),
    ]
    preferred = {FOREST: METHOD_TREE, CYCLE: METHOD_EVEN_CYCLE, LAMINAR_CATEGORY_UNION: METHOD_BIPARTITE}.get(kind)
    checks.sort(key=lambda check: check[0] != preferred)
    methods = [name for name, applies in checks if applies(inst)]
    return methods + [METHOD_BNB]


def solve_with_method(inst: Instance, method: str) -> Assignment:
    if method == METHOD_EMPTY:
        return Assignment.zero(inst)
    if method == METHOD_BIPARTITE:
        return solve_network(build_bipartite_network(inst))
    if method == METHOD_TREE:
        return solve_network(build_tree_interval_network(inst))
    if method == METHOD_EVEN_CYCLE:
        reduced = even_cycle_reduction(inst)
        solution = solve_network(build_bipartite_network(reduced))
        return Assignment.from_values(inst, solution.x)
    if method == METHOD_BNB:
        return branch_and_bound_opt(inst)
    raise BadArgumentsError(f"unknown method {method!r}")


def _solve_part(inst: Instance, part: FrozenSet[str], kind: Optional[str]) -> Tuple[Assignment, str]:
    sub = restrict(inst, part)
    method = applicable_methods(sub, kind)[0]
    try:
        solution = solve_with_method(sub, method)
    except (NotBipartiteError, SidedLaminarViolatedError) as e:
        logger.warning(f"{method} rejected a part it was chosen for ({e}); using branch and bound")
        method, solution = METHOD_BNB, branch_and_bound_opt(sub)
    violations = is_feasible(sub, solution)
    if violations:
        raise SolverError(f"{method} returned an infeasible solution: {violations[0]}")
    return solution.extend(inst), method


def solve_restricted(inst: Instance, part, kind: Optional[str] = None) -> Assignment:
    """
    Optimal assignment using only the edges of part, zero elsewhere.

    The restriction goes to the bipartite network solver, the tree-interval
    network solver or the even-cycle reduction when its structure allows,
    otherwise to branch and bound.

    Args:
        inst: a validated instance
        part: edge ids of the restriction
        kind: cover part kind, used to try its natural method first

    Returns:
        An assignment over all edges of inst
    """
    solution, method = _solve_part(inst, frozenset(part), kind)
    logger.debug(f"Solved part of {len(part)} edges with {method}: objective {solution.objective}")
    return solution


@dataclass(frozen=True)
class ApproximationResult:
    """Heaviest part solution with its ratio certificate m/l."""
    assignment: Assignment
    ratio: Fraction
    m: int
    l: int
    part_objectives: Tuple[int, ...]
    methods: Tuple[str, ...]
    best_part: int
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def objective(self) -> int:
        return self.assignment.objective


def _solve_job(job):
    return _solve_part(*job)


@log_performance('approximate')
def approximate(inst: Instance, plan: CoverPlan, workers: Optional[int] = None) -> ApproximationResult:
    """
    Solve every part of the cover and return the heaviest solution.

    Parts with the same edge set are solved once. With more than one worker
    the distinct parts are solved in a process pool; the winner is still the
    lowest-index part of maximum objective.

    Raises:
        BadArgumentsError: if the plan does not cover every edge l times
    """
    workers = APPROX_WORKERS if workers is None else workers
    uncovered = verify_plan(inst, plan)
    if uncovered:
        raise BadArgumentsError(f"plan covers {len(uncovered)} edge(s) fewer than {plan.l} times: {uncovered[:5]}")

    jobs: Dict[FrozenSet[str], str] = {}
    for part in plan.parts:
        jobs.setdefault(part.edges, part.kind)
    keys = list(jobs)
    if workers > 1 and len(keys) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_job, [(inst, key, jobs[key]) for key in keys]))
    else:
        results = [_solve_part(inst, key, jobs[key]) for key in keys]
    solved = dict(zip(keys, results))

    objectives = tuple(solved[part.edges][0].objective for part in plan.parts)
    methods = tuple(solved[part.edges][1] for part in plan.parts)
    if plan.parts:
        best = max(range(len(plan.parts)), key=lambda i: (objectives[i], -i))
        assignment = solved[plan.parts[best].edges][0]
    else:
        best, assignment = -1, Assignment.zero(inst)
    logger.info(
        f"Approximation picked part {best} with objective {assignment.objective} (ratio {plan.ratio})",
        extra={'structured_data': {'parts': len(plan.parts), 'distinct': len(keys), 'best': best}}
    )
    return ApproximationResult(
        assignment=assignment,
        ratio=plan.ratio,
        m=plan.m,
        l=plan.l,
        part_objectives=objectives,
        methods=methods,
        best_part=best,
    )


@dataclass(frozen=True)
class GapReport:
    lp_optimum: Fraction
    integer_optimum: int
    gap: Optional[Fraction]


def integer_optimum(inst: Instance) -> Assignment:
    """Exact optimum by brute force, or branch and bound when the space is too large."""
    try:
        return brute_force_opt(inst)
    except TooLargeError:
        logger.debug("Search space too large for brute force, using branch and bound")
        return branch_and_bound_opt(inst)


@log_performance('measure_gap')
def measure_gap(inst: Instance, lp: str = 'lp1') -> GapReport:
    """
    Ratio of the LP optimum to the integer optimum.

    Args:
        inst: a validated instance small enough for an exact solve
        lp: 'lp1' for the natural relaxation, 'lp1star' for the strengthened one

    Raises:
        ZeroIntegerOptimumError: if the integer optimum is 0
        BadArgumentsError: on an unknown LP name
    """
    if lp not in ('lp1', 'lp1star'):
        raise BadArgumentsError(f"unknown relaxation {lp!r}")
    best = integer_optimum(inst)
    model = build_lp1(inst) if lp == 'lp1' else build_lp1_star(inst)
    result = simplex_solve(model)
    if not result.is_optimal:
        raise SolverError(f"{lp} relaxation is {result.status}")
    if best.objective == 0:
        raise ZeroIntegerOptimumError(result.optimum, 0)
    gap = result.optimum / best.objective
    logger.info(f"Gap of {lp}: {result.optimum} / {best.objective} = {gap}")
    return GapReport(lp_optimum=result.optimum, integer_optimum=best.objective, gap=gap)
