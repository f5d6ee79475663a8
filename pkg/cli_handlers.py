"""
Command handlers for the sap command-line tool.
Each handler writes its result to the given stream and returns an exit code.
"""
import argparse
import json
from typing import TextIO

from approx import applicable_methods, approximate, measure_gap, solve_with_method
from core import is_feasible
from covers import alpha, detect_cover, plan_to_dict
from errors import BadArgumentsError, ZeroIntegerOptimumError
from exact import branch_and_bound_opt, brute_force_opt
from instance_io import dumps, load_instance, parse_assignment, read_text, serialize_instance
from logger import get_logger
from lp import build_lp1, build_lp1_star, build_lp3, simplex_solve, to_cplex_lp
from netmatrix import build_bipartite_network, build_tree_interval_network, to_dot
from reductions import gen_unweighted, gen_weighted, parse_3dm, random_two_regular, serialize_3dm

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT_ERROR = 2
EXIT_RESOURCE_LIMIT = 3


def _write_assignment(out: TextIO, assignment):
    for edge_id in assignment.support():
        out.write(f"{edge_id} {assignment.x[edge_id]}\n")


def solve_command(args: argparse.Namespace, out: TextIO) -> int:
    """Print the optimum, then one 'edge value' line per nonzero edge."""
    inst = load_instance(args.file)
    if args.method == 'exact':
        method, assignment = 'brute-force', brute_force_opt(inst)
    elif args.method == 'bnb':
        method, assignment = 'branch-and-bound', branch_and_bound_opt(inst)
    else:
        method = applicable_methods(inst)[0]
        assignment = solve_with_method(inst, method)
    logger.info(f"Solved {args.file} with {method}: objective {assignment.objective}")
    out.write(f"{assignment.objective}\n")
    _write_assignment(out, assignment)
    return EXIT_OK


def bound_command(args: argparse.Namespace, out: TextIO) -> int:
    """Print the exact LP optimum."""
    inst = load_instance(args.file)
    model = build_lp1(inst) if args.lp == 'lp1' else build_lp1_star(inst)
    result = simplex_solve(model)
    if not result.is_optimal:
        out.write(f"{result.status.lower()}\n")
        return EXIT_INFEASIBLE
    out.write(f"{result.optimum}\n")
    return EXIT_OK


def gap_command(args: argparse.Namespace, out: TextIO) -> int:
    """Print 'lp ip gap'; the gap is '-' when the integer optimum is 0."""
    inst = load_instance(args.file)
    try:
        report = measure_gap(inst, args.lp)
    except ZeroIntegerOptimumError as e:
        out.write(f"{e.lp_optimum} 0 -\n")
        return EXIT_INFEASIBLE
    out.write(f"{report.lp_optimum} {report.integer_optimum} {report.gap}\n")
    return EXIT_OK


def cover_command(args: argparse.Namespace, out: TextIO) -> int:
    """Print the cover plan as JSON."""
    inst = load_instance(args.file)
    plan = detect_cover(inst, args.strategy)
    out.write(dumps(plan_to_dict(plan)))
    return EXIT_OK


def approx_command(args: argparse.Namespace, out: TextIO) -> int:
    """Print the chosen assignment with its ratio certificate as JSON."""
    inst = load_instance(args.file)
    plan = detect_cover(inst, args.strategy)
    result = approximate(inst, plan, workers=args.workers)
    out.write(dumps({
        'objective': result.objective,
        'ratio': str(result.ratio),
        'm': result.m,
        'l': result.l,
        'best_part': result.best_part,
        'part_objectives': list(result.part_objectives),
        'methods': list(result.methods),
        'x': {edge_id: result.assignment.x[edge_id] for edge_id in result.assignment.support()},
    }))
    return EXIT_OK


def alpha_command(args: argparse.Namespace, out: TextIO) -> int:
    out.write(f"{alpha(args.k, args.k_prime)}\n")
    return EXIT_OK


def gen_command(args: argparse.Namespace, out: TextIO) -> int:
    """Emit a generated instance: a SAP instance from 3DM text, or random 3DM text."""
    if args.source == 'random3dm':
        try:
            n = int(args.target)
        except ValueError as e:
            raise BadArgumentsError(f"random3dm expects an element count, got {args.target!r}") from e
        out.write(serialize_3dm(random_two_regular(n, args.seed)))
        return EXIT_OK
    if args.split_claws and args.weighted:
        raise BadArgumentsError("--split-claws applies to the unweighted construction only")
    tdm = parse_3dm(read_text(args.target))
    inst = gen_weighted(tdm) if args.weighted else gen_unweighted(tdm, args.split_claws)
    out.write(serialize_instance(inst))
    return EXIT_OK


def check_command(args: argparse.Namespace, out: TextIO) -> int:
    """Print 'feasible' with the objective, or one line per violation."""
    inst = load_instance(args.file)
    assignment = parse_assignment(read_text(args.solution), inst)
    violations = is_feasible(inst, assignment)
    if violations:
        for violation in violations:
            out.write(f"{violation}\n")
        return EXIT_INFEASIBLE
    out.write(f"feasible {assignment.objective}\n")
    return EXIT_OK


def lp_command(args: argparse.Namespace, out: TextIO) -> int:
    """Dump a relaxation in CPLEX-LP format."""
    inst = load_instance(args.file)
    if args.lp == 'lp3':
        model = build_lp3(inst).lp
    elif args.lp == 'lp1star':
        model = build_lp1_star(inst)
    else:
        model = build_lp1(inst)
    out.write(to_cplex_lp(model))
    return EXIT_OK


def network_command(args: argparse.Namespace, out: TextIO) -> int:
    """Dump the flow network of a network-matrix instance as DOT or JSON."""
    inst = load_instance(args.file)
    net = build_tree_interval_network(inst) if args.kind == 'tree' else build_bipartite_network(inst)
    if args.format == 'dot':
        out.write(to_dot(net))
        return EXIT_OK
    out.write(json.dumps({
        'kind': net.kind,
        'tree_arcs': [
            {'id': arc.id, 'tail': list(arc.tail), 'head': list(arc.head), 'lower': arc.lower,
             'upper': arc.upper, 'rows': [":".join(key) for key in arc.rows]}
            for arc in net.tree_arcs
        ],
        'nontree_arcs': [
            {'id': arc.id, 'tail': list(arc.tail), 'head': list(arc.head), 'upper': arc.upper,
             'cost': arc.cost, 'edge': arc.edge}
            for arc in net.nontree_arcs
        ],
    }, indent=2, sort_keys=True) + "\n")
    return EXIT_OK
