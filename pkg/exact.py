"""
Exact solvers used as ground truth: exhaustive enumeration and
best-bound branch and bound over the rational LP relaxation.
"""
import heapq
import itertools
import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from config import BNB_NODE_LIMIT, BRUTE_FORCE_LIMIT
from core import Assignment, Instance, constraint_rows, effective_capacities, is_infinite
from errors import TooLargeError
from logger import get_logger, log_performance
from lp import build_lp1, simplex_solve, x_name

logger = get_logger(__name__)


@log_performance('brute_force_opt')
def brute_force_opt(inst: Instance, limit: Optional[int] = None) -> Assignment:
    """
    Find a maximum weight assignment by exhaustive search.

    Edges are assigned in id order, values ascending, so the first optimum met
    is the lexicographically smallest one. Partial assignments that already
    violate a row are cut off, as is any branch that cannot beat the
    incumbent.

    Args:
        inst: a validated instance
        limit: maximum size of the search space, product of (c'_e + 1)

    Returns:
        An optimal assignment

    Raises:
        TooLargeError: if the search space exceeds the limit
        UnboundedError: if some weighted edge has no finite bound
    """
    limit = BRUTE_FORCE_LIMIT if limit is None else limit
    caps = effective_capacities(inst)
    order = list(inst.edge_ids)
    size = math.prod(caps[e] + 1 for e in order)
    if size > limit:
        raise TooLargeError('brute force search space', size, limit)

    rows = [row for row in constraint_rows(inst) if not is_infinite(row.rhs)]
    slack = [row.rhs for row in rows]
    touches: List[List[Tuple[int, int]]] = [[] for _ in order]
    position = {edge_id: i for i, edge_id in enumerate(order)}
    for r, row in enumerate(rows):
        for edge_id, coef in row.coefs.items():
            touches[position[edge_id]].append((r, coef))
    weights = [inst.edge_map[e].w for e in order]
    upper = [caps[e] for e in order]
    remaining = list(itertools.accumulate((w * c for w, c in zip(reversed(weights), reversed(upper))), initial=0))
    remaining.reverse()

    current = [0] * len(order)
    best_value = -1
    best: List[int] = []

    def search(pos: int, value: int):
        nonlocal best_value, best
        if pos == len(order):
            if value > best_value:
                best_value = value
                best = list(current)
            return
        if value + remaining[pos] <= best_value:
            return
        amount = 0
        while True:
            search(pos + 1, value + weights[pos] * amount)
            if amount == upper[pos] or not all(slack[r] >= coef for r, coef in touches[pos]):
                break
            for r, coef in touches[pos]:
                slack[r] -= coef
            amount += 1
            current[pos] = amount
        for r, coef in touches[pos]:
            slack[r] += coef * amount
        current[pos] = 0

    search(0, 0)
    return Assignment.from_values(inst, dict(zip(order, best)))


def _most_fractional(solution: Dict[str, Fraction], order: List[str]) -> Optional[str]:
    """Edge with the largest fractional part, ties by edge id; None if integral."""
    chosen, chosen_part = None, Fraction(0)
    for edge_id in order:
        value = solution[x_name(edge_id)]
        part = value - math.floor(value)
        if part > chosen_part:
            chosen, chosen_part = edge_id, part
    return chosen


@log_performance('branch_and_bound_opt')
def branch_and_bound_opt(inst: Instance, node_limit: Optional[int] = None) -> Assignment:
    """
    Find a maximum weight assignment by best-bound branch and bound.

    Each node solves the LP1 relaxation exactly over effective capacities;
    nodes whose rounded-down bound cannot beat the integer incumbent are pruned.

    Args:
        inst: a validated instance
        node_limit: maximum number of LP relaxations to solve

    Returns:
        An optimal assignment

    Raises:
        UnboundedError: if some weighted edge has no finite bound
        TooLargeError: if the node limit is reached
    """
    node_limit = BNB_NODE_LIMIT if node_limit is None else node_limit
    caps = effective_capacities(inst)
    order = list(inst.edge_ids)
    root = build_lp1(inst, capacities=caps)
    base_bounds = {x_name(e): (Fraction(0), Fraction(caps[e])) for e in order}

    incumbent = Assignment.zero(inst)
    counter = itertools.count()
    heap = []
    solved = 0

    def evaluate(bounds):
        nonlocal solved, incumbent
        solved += 1
        if solved > node_limit:
            raise TooLargeError('branch and bound nodes', solved, node_limit)
        result = simplex_solve(root.with_bounds(bounds))
        if not result.is_optimal or math.floor(result.optimum) <= incumbent.objective:
            return
        branch_on = _most_fractional(result.solution, order)
        if branch_on is None:
            values = {e: int(result.solution[x_name(e)]) for e in order}
            incumbent = Assignment.from_values(inst, values)
            logger.debug(f"New incumbent with objective {incumbent.objective}")
            return
        heapq.heappush(heap, (-result.optimum, next(counter), bounds, branch_on, result.solution))

    evaluate(base_bounds)
    while heap:
        negative_bound, _, bounds, edge_id, solution = heapq.heappop(heap)
        if math.floor(-negative_bound) <= incumbent.objective:
            continue
        name = x_name(edge_id)
        value = solution[name]
        lower, upper = bounds[name]
        down = dict(bounds)
        down[name] = (lower, Fraction(math.floor(value)))
        up = dict(bounds)
        up[name] = (Fraction(math.ceil(value)), upper)
        evaluate(down)
        evaluate(up)

    logger.debug(f"Branch and bound finished after {solved} relaxations")
    return incumbent
