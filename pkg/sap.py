#!/usr/bin/env python3
"""
Command-line entry point for the simultaneous assignment toolkit.
Handles argument parsing, command dispatch and exit codes.
"""
import argparse
import json
import sys
from typing import List, Optional, TextIO

from cli_handlers import (
    EXIT_INFEASIBLE,
    EXIT_INPUT_ERROR,
    EXIT_OK,
    EXIT_RESOURCE_LIMIT,
    alpha_command,
    approx_command,
    bound_command,
    check_command,
    cover_command,
    gap_command,
    gen_command,
    lp_command,
    network_command,
    solve_command,
)
from config import validate_config
from errors import (
    BadArgumentsError,
    ConfigurationError,
    InfeasibleBoundsError,
    InfeasibleSolutionError,
    InstanceSyntaxError,
    InstanceValidationError,
    NoLocalIntervalOrderError,
    NoStructureMatchedError,
    NonEmptyLaminarSystemError,
    NotBipartiteError,
    NotForestError,
    NotLocallyLaminarError,
    NotTwoRegularError,
    SAPError,
    SchemaError,
    SidedLaminarViolatedError,
    SparsityViolationError,
    TooLargeError,
    TooManySubgraphsError,
    UnboundedError,
    UnknownEdgeError,
)
from logger import get_error_stats, get_logger, get_performance_stats, set_log_level

logger = get_logger(__name__)

INPUT_ERRORS = (
    BadArgumentsError,
    ConfigurationError,
    InstanceSyntaxError,
    InstanceValidationError,
    SchemaError,
    UnknownEdgeError,
    UnboundedError,
    NotTwoRegularError,
    NotBipartiteError,
    NotLocallyLaminarError,
    SidedLaminarViolatedError,
    NotForestError,
    NoLocalIntervalOrderError,
    NonEmptyLaminarSystemError,
)
RESOURCE_ERRORS = (TooLargeError, TooManySubgraphsError)
INFEASIBLE_ERRORS = (SparsityViolationError, NoStructureMatchedError, InfeasibleBoundsError, InfeasibleSolutionError)


def setup_parser() -> argparse.ArgumentParser:
    """Set up the argument parser with every subcommand."""
    parser = argparse.ArgumentParser(prog='sap', description='Simultaneous assignment solvers and experiments.')
    parser.add_argument('--stats', action='store_true', help='print solver timings and errors as JSON on stderr')
    parser.add_argument('--log-level', default=None, help='override SAP_LOG_LEVEL for this run')
    commands = parser.add_subparsers(dest='command', required=True)

    solve = commands.add_parser('solve', help='maximum weight simultaneous assignment')
    solve.add_argument('file')
    solve.add_argument('--method', choices=['exact', 'bnb', 'auto'], default='auto')
    solve.set_defaults(handler=solve_command)

    bound = commands.add_parser('bound', help='exact LP relaxation optimum')
    bound.add_argument('file')
    bound.add_argument('--lp', choices=['lp1', 'lp1star'], default='lp1')
    bound.set_defaults(handler=bound_command)

    gap = commands.add_parser('gap', help='LP optimum, integer optimum and their ratio')
    gap.add_argument('file')
    gap.add_argument('--lp', choices=['lp1', 'lp1star'], default='lp1')
    gap.set_defaults(handler=gap_command)

    for name, handler, help_text in (
        ('cover', cover_command, 'build an (m,l)-cover'),
        ('approx', approx_command, 'cover-based approximation'),
    ):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('file')
        sub.add_argument('--strategy', default='laminar', help='laminar, structural or forest:m,l')
        if name == 'approx':
            sub.add_argument('--workers', type=int, default=None, help='override APPROX_WORKERS')
        sub.set_defaults(handler=handler)

    alpha = commands.add_parser('alpha', help="best laminar cover ratio for k subgraphs with overlap k'")
    alpha.add_argument('k', type=int)
    alpha.add_argument('k_prime', type=int)
    alpha.set_defaults(handler=alpha_command)

    gen = commands.add_parser('gen', help='generate instances')
    gen.add_argument('source', choices=['3dm', 'random3dm'])
    gen.add_argument('target', help='3DM file for 3dm, element count for random3dm')
    gen.add_argument('--weighted', action='store_true')
    gen.add_argument('--split-claws', action='store_true')
    gen.add_argument('--seed', type=int, default=0)
    gen.set_defaults(handler=gen_command)

    check = commands.add_parser('check', help='feasibility of a solution file')
    check.add_argument('file')
    check.add_argument('solution')
    check.set_defaults(handler=check_command)

    lp = commands.add_parser('lp', help='dump a relaxation')
    lp.add_argument('file')
    lp.add_argument('--lp', choices=['lp1', 'lp1star', 'lp3'], default='lp1')
    lp.add_argument('--format', choices=['cplex'], default='cplex')
    lp.set_defaults(handler=lp_command)

    network = commands.add_parser('network', help='dump the flow network of a network-matrix instance')
    network.add_argument('file')
    network.add_argument('--kind', choices=['bipartite', 'tree'], default='bipartite')
    network.add_argument('--format', choices=['dot', 'json'], default='dot')
    network.set_defaults(handler=network_command)

    return parser


def exit_code_for(error: Exception) -> int:
    """Map an error to the documented exit code."""
    if isinstance(error, RESOURCE_ERRORS):
        return EXIT_RESOURCE_LIMIT
    if isinstance(error, INPUT_ERRORS):
        return EXIT_INPUT_ERROR
    return EXIT_INFEASIBLE


def main(argv: Optional[List[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    """Run one command and return its exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = setup_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT_ERROR

    try:
        if args.log_level:
            set_log_level(args.log_level)
        validate_config()
        code = args.handler(args, out)
    except ValueError as e:
        err.write(f"error: {e}\n")
        code = EXIT_INPUT_ERROR
    except SAPError as e:
        code = exit_code_for(e)
        if not isinstance(e, INFEASIBLE_ERRORS + INPUT_ERRORS + RESOURCE_ERRORS):
            logger.error(f"Command {args.command} failed: {e}")
        err.write(f"error: {e}\n")

    if args.stats:
        err.write(json.dumps({
            'performance': get_performance_stats(),
            'errors': get_error_stats(),
        }, indent=2, sort_keys=True, default=str) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
