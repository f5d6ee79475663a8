"""
Exact rational linear programming: model builders, a two-phase simplex with
Bland's rule, odd-set cuts of bidirected systems and a CPLEX-LP writer.
"""
import itertools
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from config import (
    BLOSSOM_COLUMN_LIMIT,
    BLOSSOM_CUT_LIMIT,
    BLOSSOM_ROW_LIMIT,
    LP1STAR_CUT_BUDGET,
    LP1STAR_SUBSET_BUDGET,
    LP1STAR_TREE_LIMIT,
)
from core import (
    Instance,
    constraint_rows,
    category_partition,
    is_infinite,
    is_locally_laminar,
    max_overlap,
    restrict,
)
from covers import iter_labeled_trees, tree_to_category_system
from errors import BadArgumentsError, NotLocallyLaminarError, SolverError, TooLargeError
from logger import get_logger, log_performance

logger = get_logger(__name__)

LE, EQ, GE = '<=', '=', '>='
MAXIMIZE, MINIMIZE = 'max', 'min'

OPTIMAL = 'Optimal'
INFEASIBLE = 'Infeasible'
UNBOUNDED = 'Unbounded'


def x_name(edge_id: str) -> str:
    return f"x[{edge_id}]"


def category_name(indices: Iterable[int]) -> str:
    return "C{" + ",".join(str(i) for i in sorted(indices)) + "}"


def _to_bound(value) -> Optional[Fraction]:
    if value is None or is_infinite(value):
        return None
    return Fraction(value)


@dataclass(frozen=True)
class Column:
    name: str
    lower: Optional[Fraction] = Fraction(0)
    upper: Optional[Fraction] = None


@dataclass(frozen=True)
class Row:
    name: str
    coefs: Tuple[Tuple[str, Fraction], ...]
    sense: str
    rhs: Fraction

    def activity(self, point: Mapping[str, Fraction]) -> Fraction:
        return sum((coef * point.get(col, 0) for col, coef in self.coefs), Fraction(0))

    def satisfied_by(self, point: Mapping[str, Fraction]) -> bool:
        value = self.activity(point)
        if self.sense == LE:
            return value <= self.rhs
        if self.sense == GE:
            return value >= self.rhs
        return value == self.rhs


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """An immutable LP with named columns and rows; None bounds are infinite."""
    name: str
    columns: Tuple[Column, ...]
    rows: Tuple[Row, ...]
    objective: Tuple[Tuple[str, Fraction], ...]
    sense: str = MAXIMIZE
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @property
    def column_names(self) -> List[str]:
        return [column.name for column in self.columns]

    def same_model(self, other: 'LinearProgram') -> bool:
        """True when both programs have identical columns, rows and objective."""
        return (self.columns, self.rows, self.objective, self.sense) == \
            (other.columns, other.rows, other.objective, other.sense)

    def with_bounds(self, overrides: Mapping[str, Tuple[Optional[Fraction], Optional[Fraction]]]) -> 'LinearProgram':
        columns = tuple(
            replace(column, lower=overrides[column.name][0], upper=overrides[column.name][1])
            if column.name in overrides else column
            for column in self.columns
        )
        return replace(self, columns=columns)

    def with_rows(self, rows: Sequence[Row], **metadata) -> 'LinearProgram':
        merged = dict(self.metadata)
        merged.update(metadata)
        return replace(self, rows=self.rows + tuple(rows), metadata=merged)


class LinearProgramBuilder:
    """Incremental construction of a LinearProgram with name checks."""

    def __init__(self, name: str, sense: str = MAXIMIZE):
        if sense not in (MAXIMIZE, MINIMIZE):
            raise BadArgumentsError(f"Unknown objective sense: {sense}")
        self.name = name
        self.sense = sense
        self.columns: Dict[str, Column] = {}
        self.rows: Dict[str, Row] = {}
        self.objective: Dict[str, Fraction] = {}
        self.metadata: Dict[str, Any] = {}

    def add_column(self, name: str, lower=0, upper=None) -> str:
        if name in self.columns:
            raise BadArgumentsError(f"Duplicate column {name}")
        self.columns[name] = Column(name, _to_bound(lower), _to_bound(upper))
        return name

    def add_row(self, name: str, coefs: Mapping[str, Any], sense: str, rhs) -> str:
        if name in self.rows:
            raise BadArgumentsError(f"Duplicate row {name}")
        if sense not in (LE, EQ, GE):
            raise BadArgumentsError(f"Unknown row sense: {sense}")
        for column in coefs:
            if column not in self.columns:
                raise BadArgumentsError(f"Row {name} references unknown column {column}")
        cleaned = tuple((col, Fraction(coef)) for col, coef in coefs.items() if coef != 0)
        self.rows[name] = Row(name, cleaned, sense, Fraction(rhs))
        return name

    def set_objective(self, coefs: Mapping[str, Any]):
        for column in coefs:
            if column not in self.columns:
                raise BadArgumentsError(f"Objective references unknown column {column}")
        self.objective = {col: Fraction(coef) for col, coef in coefs.items() if coef != 0}

    def build(self) -> LinearProgram:
        return LinearProgram(
            name=self.name,
            columns=tuple(self.columns.values()),
            rows=tuple(self.rows.values()),
            objective=tuple(self.objective.items()),
            sense=self.sense,
            metadata=dict(self.metadata),
        )


@dataclass(frozen=True)
class LpResult:
    status: str
    optimum: Optional[Fraction] = None
    solution: Mapping[str, Fraction] = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def is_integral(self, prefix: str = '') -> bool:
        return all(value.denominator == 1 for name, value in self.solution.items() if name.startswith(prefix))


# Simplex

class _Tableau:
    """Dense canonical tableau; the last entry of each row is the right-hand side."""

    def __init__(self, rows: List[List[Fraction]], basis: List[int], width: int):
        self.rows = rows
        self.basis = basis
        self.width = width

    def pivot(self, r: int, c: int):
        pivot_row = self.rows[r]
        factor = pivot_row[c]
        if factor != 1:
            self.rows[r] = pivot_row = [value / factor for value in pivot_row]
        for i, row in enumerate(self.rows):
            if i != r and row[c] != 0:
                scale = row[c]
                self.rows[i] = [a - scale * b for a, b in zip(row, pivot_row)]
        self.basis[r] = c

    def reduced_costs(self, cost: Sequence[Fraction], allowed: Sequence[bool]) -> List[Fraction]:
        reduced = list(cost) + [Fraction(0)]
        for i, row in enumerate(self.rows):
            cb = cost[self.basis[i]]
            if cb != 0:
                reduced = [d - cb * a for d, a in zip(reduced, row)]
        for j in range(self.width):
            if not allowed[j]:
                reduced[j] = Fraction(0)
        return reduced

    def optimize(self, cost: Sequence[Fraction], allowed: Sequence[bool]) -> bool:
        """Maximize cost over the tableau with Bland's rule; False when unbounded."""
        while True:
            reduced = self.reduced_costs(cost, allowed)
            entering = next((j for j in range(self.width) if reduced[j] > 0), None)
            if entering is None:
                return True
            leaving = None
            best_ratio = None
            for i, row in enumerate(self.rows):
                if row[entering] > 0:
                    ratio = row[-1] / row[entering]
                    if best_ratio is None or ratio < best_ratio or \
                            (ratio == best_ratio and self.basis[i] < self.basis[leaving]):
                        best_ratio = ratio
                        leaving = i
            if leaving is None:
                return False
            self.pivot(leaving, entering)


def _standard_form(lp: LinearProgram):
    """
    Substitute bounded columns by nonnegative variables.

    Returns the affine map column -> (constant, [(sign, var index)]), the
    constraint list over standard variables and the variable count, or None
    when some column has lower > upper.
    """
    affine: Dict[str, Tuple[Fraction, List[Tuple[int, int]]]] = {}
    constraints: List[Tuple[Dict[int, Fraction], str, Fraction]] = []
    count = 0
    for column in lp.columns:
        lower, upper = column.lower, column.upper
        if lower is not None and upper is not None and lower > upper:
            return None
        if lower is not None:
            affine[column.name] = (lower, [(1, count)])
            if upper is not None:
                constraints.append(({count: Fraction(1)}, LE, upper - lower))
            count += 1
        elif upper is not None:
            affine[column.name] = (upper, [(-1, count)])
            count += 1
        else:
            affine[column.name] = (Fraction(0), [(1, count), (-1, count + 1)])
            count += 2
    for row in lp.rows:
        coefs: Dict[int, Fraction] = {}
        rhs = row.rhs
        for name, coef in row.coefs:
            constant, terms = affine[name]
            rhs -= coef * constant
            for sign, index in terms:
                coefs[index] = coefs.get(index, Fraction(0)) + sign * coef
        constraints.append(({i: v for i, v in coefs.items() if v != 0}, row.sense, rhs))
    return affine, constraints, count


def verify_solution(lp: LinearProgram, solution: Mapping[str, Fraction]) -> List[str]:
    """Names of rows and columns the solution violates; empty when exact."""
    problems = []
    for column in lp.columns:
        value = solution.get(column.name, Fraction(0))
        if column.lower is not None and value < column.lower:
            problems.append(column.name)
        elif column.upper is not None and value > column.upper:
            problems.append(column.name)
    for row in lp.rows:
        if not row.satisfied_by(solution):
            problems.append(row.name)
    return problems


def objective_value(lp: LinearProgram, solution: Mapping[str, Fraction]) -> Fraction:
    return sum((coef * solution.get(name, 0) for name, coef in lp.objective), Fraction(0))


@log_performance('simplex_solve')
def simplex_solve(lp: LinearProgram) -> LpResult:
    """
    Solve an LP exactly with the two-phase simplex method and Bland's rule.

    Args:
        lp: the program to solve

    Returns:
        LpResult with status Optimal, Infeasible or Unbounded; optimal
        solutions are re-verified row by row in exact arithmetic
    """
    standard = _standard_form(lp)
    if standard is None:
        return LpResult(INFEASIBLE)
    affine, constraints, count = standard

    # Normalize right-hand sides and lay out slack and artificial columns.
    normalized = []
    for coefs, sense, rhs in constraints:
        if rhs < 0:
            coefs = {i: -v for i, v in coefs.items()}
            rhs = -rhs
            sense = {LE: GE, GE: LE, EQ: EQ}[sense]
        normalized.append((coefs, sense, rhs))
    slack_count = sum(1 for _, sense, _ in normalized if sense != EQ)
    artificial_count = sum(1 for _, sense, _ in normalized if sense != LE)
    width = count + slack_count + artificial_count
    first_artificial = count + slack_count

    rows: List[List[Fraction]] = []
    basis: List[int] = []
    slack = count
    artificial = first_artificial
    for coefs, sense, rhs in normalized:
        row = [Fraction(0)] * (width + 1)
        for index, value in coefs.items():
            row[index] = value
        row[-1] = rhs
        if sense == LE:
            row[slack] = Fraction(1)
            basis.append(slack)
            slack += 1
        else:
            if sense == GE:
                row[slack] = Fraction(-1)
                slack += 1
            row[artificial] = Fraction(1)
            basis.append(artificial)
            artificial += 1
        rows.append(row)

    tableau = _Tableau(rows, basis, width)
    everything = [True] * width

    if artificial_count:
        phase_one = [Fraction(0)] * first_artificial + [Fraction(-1)] * artificial_count
        tableau.optimize(phase_one, everything)
        infeasibility = sum((row[-1] for row, b in zip(tableau.rows, tableau.basis) if b >= first_artificial), Fraction(0))
        if infeasibility > 0:
            logger.debug(f"LP '{lp.name}' is infeasible")
            return LpResult(INFEASIBLE)
        # Drive zero-level artificials out of the basis; drop redundant rows.
        r = 0
        while r < len(tableau.rows):
            if tableau.basis[r] >= first_artificial:
                replacement = next((j for j in range(first_artificial) if tableau.rows[r][j] != 0), None)
                if replacement is None:
                    del tableau.rows[r]
                    del tableau.basis[r]
                    continue
                tableau.pivot(r, replacement)
            r += 1

    cost = [Fraction(0)] * width
    direction = 1 if lp.sense == MAXIMIZE else -1
    for name, coef in lp.objective:
        _, terms = affine[name]
        for sign, index in terms:
            cost[index] += direction * sign * coef
    allowed = [j < first_artificial for j in range(width)]
    if not tableau.optimize(cost, allowed):
        logger.debug(f"LP '{lp.name}' is unbounded")
        return LpResult(UNBOUNDED)

    values = [Fraction(0)] * width
    for row, b in zip(tableau.rows, tableau.basis):
        values[b] = row[-1]
    solution = {}
    for column in lp.columns:
        constant, terms = affine[column.name]
        solution[column.name] = constant + sum((sign * values[index] for sign, index in terms), Fraction(0))

    problems = verify_solution(lp, solution)
    if problems:
        raise SolverError(f"Simplex solution of '{lp.name}' violates {', '.join(problems[:5])}")
    return LpResult(OPTIMAL, objective_value(lp, solution), solution)


# LP1

def build_lp1(inst: Instance, capacities: Optional[Mapping[str, int]] = None) -> LinearProgram:
    """
    The natural relaxation: x_e in [0, c_e], one row per subgraph degree bound
    and one per degree-sum bound, maximizing total weight.

    Args:
        inst: a validated instance
        capacities: optional finite upper bounds replacing c_e

    Returns:
        The relaxation as a LinearProgram
    """
    builder = LinearProgramBuilder('lp1')
    for edge_id in inst.edge_ids:
        upper = capacities[edge_id] if capacities is not None else inst.edge_map[edge_id].c
        builder.add_column(x_name(edge_id), 0, upper)
    for row in constraint_rows(inst):
        if is_infinite(row.rhs):
            continue
        builder.add_row(row.name, {x_name(e): coef for e, coef in row.coefs.items()}, LE, row.rhs)
    builder.set_objective({x_name(e): inst.edge_map[e].w for e in inst.edge_ids})
    builder.metadata['kind'] = 'lp1'
    return builder.build()


# Bidirected systems and LP3

@dataclass(frozen=True)
class BidirectedSystem:
    """
    Integer system a <= Mx <= b, d <= x <= c with at most two unit entries per
    column (by absolute value). None stands for an infinite bound.
    """
    row_names: Tuple[str, ...]
    column_names: Tuple[str, ...]
    matrix: Tuple[Tuple[int, ...], ...]
    a: Tuple[Optional[int], ...]
    b: Tuple[Optional[int], ...]
    c: Tuple[Optional[int], ...]
    d: Tuple[Optional[int], ...]

    def __post_init__(self):
        for j, name in enumerate(self.column_names):
            total = sum(abs(row[j]) for row in self.matrix)
            if total > 2:
                raise BadArgumentsError(f"Column {name} has absolute column sum {total} > 2")

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.row_names), len(self.column_names))

    @classmethod
    def from_linear_program(cls, lp: LinearProgram) -> 'BidirectedSystem':
        columns = lp.column_names
        index = {name: j for j, name in enumerate(columns)}
        matrix, a, b = [], [], []
        for row in lp.rows:
            entries = [0] * len(columns)
            for name, coef in row.coefs:
                if coef.denominator != 1:
                    raise BadArgumentsError(f"Row {row.name} has a fractional coefficient")
                entries[index[name]] = int(coef)
            matrix.append(tuple(entries))
            rhs = int(row.rhs)
            a.append(rhs if row.sense in (EQ, GE) else None)
            b.append(rhs if row.sense in (EQ, LE) else None)

        def as_int(value):
            return None if value is None else int(value)

        return cls(
            row_names=tuple(row.name for row in lp.rows),
            column_names=tuple(columns),
            matrix=tuple(matrix),
            a=tuple(a),
            b=tuple(b),
            c=tuple(as_int(column.upper) for column in lp.columns),
            d=tuple(as_int(column.lower) for column in lp.columns),
        )


@dataclass(frozen=True, eq=False)
class ExtendedFormulation:
    """LP3 together with its bidirected system and the projection onto x."""
    lp: LinearProgram
    system: BidirectedSystem
    projection: Mapping[str, Mapping[str, int]]

    def lift(self, x_values: Mapping[str, Fraction]) -> Dict[str, Fraction]:
        """Extend an x vector (keyed by x column names) to every LP3 column."""
        return {
            column: sum((coef * x_values.get(x_name(e), Fraction(0)) for e, coef in terms.items()), Fraction(0))
            for column, terms in self.projection.items()
        }


def _set_key(items: Iterable[str]) -> str:
    return "{" + ",".join(sorted(items)) + "}"


def _maximal_children(family: Sequence[FrozenSet], parent: FrozenSet) -> List[FrozenSet]:
    inside = [s for s in family if s < parent]
    return [s for s in inside if not any(s < t for t in inside)]


def build_lp3(inst: Instance) -> ExtendedFormulation:
    """
    Extended formulation of a locally laminar instance.

    Adds y^v_F for every distinct trace F at v and z_L for every degree-sum set
    (singletons added with infinite bound), tied together by equality rows in
    which every column occurs at most twice with coefficient +1 or -1.

    Raises:
        NotLocallyLaminarError: if some node has crossing traces
    """
    report = is_locally_laminar(inst)
    if not report:
        raise NotLocallyLaminarError(report.witness)

    builder = LinearProgramBuilder('lp3')
    projection: Dict[str, Dict[str, int]] = {}

    for edge_id in inst.edge_ids:
        name = builder.add_column(x_name(edge_id), 0, inst.edge_map[edge_id].c)
        projection[name] = {edge_id: 1}

    # Degree-sum family, deduplicated by node set, singletons added.
    active = [node for node in sorted(inst.incidence) if inst.incidence[node]]
    bounds: Dict[FrozenSet[str], Any] = {}
    for lam in inst.laminar_sets:
        key = frozenset(lam.node_ids)
        current = bounds.get(key)
        if current is None or (not is_infinite(lam.g) and (is_infinite(current) or lam.g < current)):
            bounds[key] = lam.g
    for node in active:
        bounds.setdefault(frozenset([node]), None)

    def z_name(nodes: FrozenSet[str]) -> str:
        return f"z[{_set_key(nodes)}]"

    def z_terms(nodes: FrozenSet[str]) -> Dict[str, int]:
        terms: Dict[str, int] = {}
        for node in nodes:
            for edge_id in inst.incidence.get(node, ()):
                terms[edge_id] = terms.get(edge_id, 0) + 1
        return terms

    for node in active:
        key = frozenset([node])
        bound = bounds[key]
        name = builder.add_column(z_name(key), 0, None if bound is None else bound)
        projection[name] = z_terms(key)
    big_sets = sorted((s for s in bounds if len(s) > 1), key=lambda s: (len(s), sorted(s)))
    for nodes in big_sets:
        name = builder.add_column(z_name(nodes), 0, bounds[nodes])
        projection[name] = z_terms(nodes)

    for node in active:
        traces: Dict[FrozenSet[str], int] = {}
        for subgraph in inst.subgraphs:
            trace = inst.trace(subgraph, node)
            if trace:
                bound = subgraph.b[node]
                traces[trace] = min(bound, traces.get(trace, bound))
        family = sorted(traces, key=lambda s: (len(s), sorted(s)))

        def y_name(trace: FrozenSet[str]) -> str:
            return f"y[{node}:{_set_key(trace)}]"

        for trace in family:
            name = builder.add_column(y_name(trace), 0, traces[trace])
            projection[name] = {e: 1 for e in trace}
        for trace in family:
            children = _maximal_children(family, trace)
            covered = frozenset().union(*children) if children else frozenset()
            coefs = {x_name(e): 1 for e in sorted(trace - covered)}
            coefs.update({y_name(child): 1 for child in children})
            coefs[y_name(trace)] = -1
            builder.add_row(f"c1[{node}:{_set_key(trace)}]", coefs, EQ, 0)
        top = [s for s in family if not any(s < t for t in family)]
        covered = frozenset().union(*top) if top else frozenset()
        coefs = {x_name(e): 1 for e in inst.incidence[node] if e not in covered}
        coefs.update({y_name(trace): 1 for trace in top})
        coefs[z_name(frozenset([node]))] = -1
        builder.add_row(f"c2[{node}]", coefs, EQ, 0)

    for nodes in big_sets:
        children = _maximal_children(big_sets, nodes)
        covered = frozenset().union(*children) if children else frozenset()
        coefs = {z_name(child): 1 for child in children}
        coefs.update({z_name(frozenset([v])): 1 for v in sorted(nodes - covered) if v in active})
        coefs[z_name(nodes)] = -1
        builder.add_row(f"c3[{_set_key(nodes)}]", coefs, EQ, 0)

    builder.set_objective({x_name(e): inst.edge_map[e].w for e in inst.edge_ids})
    builder.metadata['kind'] = 'lp3'
    lp = builder.build()
    return ExtendedFormulation(lp=lp, system=BidirectedSystem.from_linear_program(lp), projection=projection)


# Odd-set cuts

@dataclass(frozen=True)
class BlossomCut:
    """Odd-set inequality sum(coefs * x) <= rhs derived from rows U, W and columns F, H."""
    U: Tuple[str, ...]
    W: Tuple[str, ...]
    F: Tuple[str, ...]
    H: Tuple[str, ...]
    coefs: Tuple[Tuple[str, Fraction], ...]
    rhs: int

    def activity(self, point: Mapping[str, Fraction]) -> Fraction:
        return sum((coef * point.get(col, 0) for col, coef in self.coefs), Fraction(0))

    def violation(self, point: Mapping[str, Fraction]) -> Fraction:
        return self.activity(point) - self.rhs

    def key(self) -> Tuple:
        return (self.coefs, self.rhs)


def _check_size(sys: BidirectedSystem, row_limit: Optional[int], column_limit: Optional[int]):
    row_limit = BLOSSOM_ROW_LIMIT if row_limit is None else row_limit
    column_limit = BLOSSOM_COLUMN_LIMIT if column_limit is None else column_limit
    m, n = sys.shape
    if m > row_limit:
        raise TooLargeError('odd-set cut enumeration rows', m, row_limit)
    if n > column_limit:
        raise TooLargeError('odd-set cut enumeration columns', n, column_limit)


def _row_signature(sys: BidirectedSystem, U: Sequence[int], W: Sequence[int]):
    n = len(sys.column_names)
    sigma = [0] * n
    touch = [0] * n
    for i in U:
        for j, value in enumerate(sys.matrix[i]):
            if value:
                sigma[j] += value
                touch[j] += abs(value)
    for i in W:
        for j, value in enumerate(sys.matrix[i]):
            if value:
                sigma[j] -= value
                touch[j] += abs(value)
    delta = [j for j in range(n) if touch[j] == 1]
    return sigma, delta


def _make_cut(sys: BidirectedSystem, U, W, F, H, sigma) -> BlossomCut:
    total = sum(sys.b[i] for i in U) - sum(sys.a[i] for i in W) + \
        sum(sys.c[j] for j in F) - sum(sys.d[j] for j in H)
    in_f, in_h = set(F), set(H)
    coefs = []
    for j, name in enumerate(sys.column_names):
        value = Fraction(sigma[j] + (j in in_f) - (j in in_h), 2)
        if value != 0:
            coefs.append((name, value))
    return BlossomCut(
        U=tuple(sys.row_names[i] for i in U),
        W=tuple(sys.row_names[i] for i in W),
        F=tuple(sys.column_names[j] for j in F),
        H=tuple(sys.column_names[j] for j in H),
        coefs=tuple(coefs),
        rhs=math.floor(Fraction(total, 2)),
    )


def iter_blossom_cuts(sys: BidirectedSystem) -> Iterator[BlossomCut]:
    """Every odd-set inequality of the system, duplicates included."""
    m = len(sys.row_names)
    for states in itertools.product((0, 1, 2), repeat=m):
        U = [i for i, s in enumerate(states) if s == 1]
        W = [i for i, s in enumerate(states) if s == 2]
        if not U and not W:
            continue
        if any(sys.b[i] is None for i in U) or any(sys.a[i] is None for i in W):
            continue
        sigma, delta = _row_signature(sys, U, W)
        base = sum(sys.b[i] for i in U) - sum(sys.a[i] for i in W)
        for choice in itertools.product((True, False), repeat=len(delta)):
            F = [j for j, in_f in zip(delta, choice) if in_f]
            H = [j for j, in_f in zip(delta, choice) if not in_f]
            if any(sys.c[j] is None for j in F) or any(sys.d[j] is None for j in H):
                continue
            if (base + sum(sys.c[j] for j in F) - sum(sys.d[j] for j in H)) % 2 == 1:
                yield _make_cut(sys, U, W, F, H, sigma)


def enumerate_blossom_cuts(sys: BidirectedSystem, row_limit: Optional[int] = None,
                           column_limit: Optional[int] = None,
                           cut_limit: Optional[int] = None) -> List[BlossomCut]:
    """
    All distinct odd-set inequalities of a bidirected system.

    Rows or columns whose bound would be infinite in U, W, F or H are skipped.

    Raises:
        TooLargeError: if the system exceeds the configured enumeration size,
            or more than cut_limit inequalities are generated
    """
    _check_size(sys, row_limit, column_limit)
    cut_limit = BLOSSOM_CUT_LIMIT if cut_limit is None else cut_limit
    seen = set()
    cuts = []
    for generated, cut in enumerate(iter_blossom_cuts(sys), start=1):
        if generated > cut_limit:
            raise TooLargeError('odd-set cuts', generated, cut_limit)
        key = cut.key()
        if key not in seen:
            seen.add(key)
            cuts.append(cut)
    logger.debug(f"Enumerated {len(cuts)} distinct odd-set cuts on {sys.shape[0]} rows")
    return cuts


def _row_adjacency(sys: BidirectedSystem) -> List[set]:
    m = len(sys.row_names)
    adjacency = [set() for _ in range(m)]
    for j in range(len(sys.column_names)):
        rows = [i for i in range(m) if sys.matrix[i][j]]
        for i in rows:
            adjacency[i].update(r for r in rows if r != i)
    return adjacency


def _connected(rows: Sequence[int], adjacency: List[set]) -> bool:
    members = set(rows)
    stack = [rows[0]]
    seen = {rows[0]}
    while stack:
        i = stack.pop()
        for r in adjacency[i] & members:
            if r not in seen:
                seen.add(r)
                stack.append(r)
    return len(seen) == len(members)


def separate_blossom_cut(sys: BidirectedSystem, point: Mapping[str, Fraction],
                         row_limit: Optional[int] = None,
                         column_limit: Optional[int] = None) -> Optional[BlossomCut]:
    """
    The most violated odd-set inequality at a point satisfying the system.

    Only connected row sets are examined, and equality rows only in U; both
    restrictions leave the maximum violation unchanged. For fixed U and W the
    best F/H split is chosen per column with one parity repair.

    Returns:
        The most violated cut, or None when the point satisfies all of them
    """
    _check_size(sys, row_limit, column_limit)
    m = len(sys.row_names)
    adjacency = _row_adjacency(sys)
    p = [Fraction(point.get(name, 0)) for name in sys.column_names]
    options = []
    for i in range(m):
        states = [0]
        if sys.b[i] is not None:
            states.append(1)
        if sys.a[i] is not None and sys.a[i] != sys.b[i]:
            states.append(2)
        options.append(states)

    best: Optional[BlossomCut] = None
    best_violation = Fraction(0)
    for states in itertools.product(*options):
        U = [i for i, s in enumerate(states) if s == 1]
        W = [i for i, s in enumerate(states) if s == 2]
        chosen = U + W
        if not chosen or not _connected(sorted(chosen), adjacency):
            continue
        sigma, delta = _row_signature(sys, U, W)
        total = sum(sys.b[i] for i in U) - sum(sys.a[i] for i in W)
        violation = Fraction(sum(s * v for s, v in zip(sigma, p)) - total, 1)
        F, H = [], []
        repair = None
        feasible = True
        for j in delta:
            gain_f = p[j] - sys.c[j] if sys.c[j] is not None else None
            gain_h = sys.d[j] - p[j] if sys.d[j] is not None else None
            if gain_f is None and gain_h is None:
                feasible = False
                break
            if gain_h is None or (gain_f is not None and gain_f >= gain_h):
                F.append(j)
                total += sys.c[j]
                violation += gain_f
            else:
                H.append(j)
                total -= sys.d[j]
                violation += gain_h
            if gain_f is not None and gain_h is not None and (sys.c[j] + sys.d[j]) % 2 == 1:
                loss = abs(gain_f - gain_h)
                if repair is None or loss < repair[0]:
                    repair = (loss, j)
        if not feasible:
            continue
        if total % 2 == 0:
            if repair is None:
                continue
            loss, j = repair
            violation -= loss
            if j in F:
                F.remove(j)
                H.append(j)
            else:
                H.remove(j)
                F.append(j)
        violation = (violation + 1) / 2
        if violation > best_violation:
            best_violation = violation
            best = _make_cut(sys, U, W, sorted(F), sorted(H), sigma)
    return best


def project_cut(cut: BlossomCut, projection: Mapping[str, Mapping[str, int]]) -> Tuple[Dict[str, Fraction], int]:
    """Substitute every LP3 column by its expression in the edge variables."""
    coefs: Dict[str, Fraction] = {}
    for column, coef in cut.coefs:
        for edge_id, mult in projection[column].items():
            name = x_name(edge_id)
            coefs[name] = coefs.get(name, Fraction(0)) + coef * mult
    return {name: value for name, value in sorted(coefs.items()) if value != 0}, cut.rhs


@log_performance('lp3_blossom_closure')
def lp3_with_blossom_closure(inst: Instance, max_rounds: int = 500,
                             row_limit: Optional[int] = None) -> Tuple[LpResult, List[BlossomCut]]:
    """
    Solve LP3 and add most-violated odd-set cuts until none is violated.

    Returns:
        The final LP result and the cuts added, in order
    """
    model = build_lp3(inst)
    lp = model.lp
    cuts: List[BlossomCut] = []
    for _ in range(max_rounds):
        result = simplex_solve(lp)
        if not result.is_optimal:
            return result, cuts
        cut = separate_blossom_cut(model.system, result.solution, row_limit=row_limit)
        if cut is None:
            return result, cuts
        cuts.append(cut)
        lp = lp.with_rows([Row(f"blossom[{len(cuts)}]", cut.coefs, LE, Fraction(cut.rhs))])
    raise TooLargeError('odd-set cutting rounds', max_rounds + 1, max_rounds)


# LP1*

def maximal_laminar_category_unions(inst: Instance, budget: Optional[int] = None,
                                    tree_limit: Optional[int] = None) -> List[FrozenSet[str]]:
    """
    Unions of edge categories whose subgraph restrictions form a laminar
    family, largest first, at most budget of them.

    Every maximal laminar category system is the set of root paths of a
    labeled tree on v_0..v_k, so each tree contributes its paths intersected
    with the categories present. Trees deeper than the largest category are
    skipped: hanging their deep subtrees from v_0 loses no present category.
    Unions contained in another are dropped. The search stops after budget
    distinct unions or tree_limit trees. A locally laminar instance is its
    own single union.
    """
    budget = LP1STAR_SUBSET_BUDGET if budget is None else budget
    tree_limit = LP1STAR_TREE_LIMIT if tree_limit is None else tree_limit
    if budget <= 0 or not inst.edges:
        return []
    if is_locally_laminar(inst):
        return [frozenset(inst.edge_ids)]
    partition = category_partition(inst)
    present = frozenset(partition)
    k_prime = max_overlap(inst)
    found = set()
    examined = 0
    for tree in iter_labeled_trees(inst.k):
        if examined >= tree_limit or len(found) >= budget:
            break
        examined += 1
        if tree.depth > k_prime:
            continue
        chosen = present & tree_to_category_system(tree, inst.k, k_prime)
        if chosen:
            found.add(chosen)

    maximal = [chosen for chosen in found if not any(chosen < other for other in found)]
    unions = [frozenset().union(*(partition[I] for I in chosen)) for chosen in maximal]
    unions.sort(key=lambda edges: (-len(edges), sorted(edges)))
    logger.debug(
        f"Found {len(unions)} laminar category unions from {examined} trees",
        extra={'structured_data': {'trees': examined, 'unions': len(unions), 'categories': len(present)}}
    )
    return unions


@log_performance('build_lp1_star')
def build_lp1_star(inst: Instance, cut_budget: Optional[int] = None,
                   subset_budget: Optional[int] = None,
                   row_limit: Optional[int] = None) -> LinearProgram:
    """
    LP1 strengthened by projected odd-set cuts.

    Cuts come from the LP3 systems of the maximal locally laminar category
    unions and are discovered by separation at the current LP optimum, until
    no cut is violated or cut_budget cuts have been added. Unions whose LP3
    system is too large for enumeration are skipped and reported in metadata.
    """
    cut_budget = LP1STAR_CUT_BUDGET if cut_budget is None else cut_budget
    row_limit = BLOSSOM_ROW_LIMIT if row_limit is None else row_limit
    lp = build_lp1(inst)
    if cut_budget <= 0:
        return lp

    models = []
    skipped = 0
    for edges in maximal_laminar_category_unions(inst, subset_budget):
        model = build_lp3(restrict(inst, edges))
        if model.system.shape[0] > row_limit or model.system.shape[1] > BLOSSOM_COLUMN_LIMIT:
            skipped += 1
            continue
        models.append(model)

    rows: List[Row] = []
    seen = set()
    truncated = False
    while True:
        result = simplex_solve(lp.with_rows(rows))
        if not result.is_optimal:
            break
        added = False
        for model in models:
            point = model.lift(result.solution)
            cut = separate_blossom_cut(model.system, point, row_limit=row_limit)
            if cut is None:
                continue
            coefs, rhs = project_cut(cut, model.projection)
            key = (tuple(coefs.items()), rhs)
            if key in seen:
                continue
            seen.add(key)
            rows.append(Row(f"blossom[{len(rows) + 1}]", tuple(coefs.items()), LE, Fraction(rhs)))
            added = True
            if len(rows) >= cut_budget:
                truncated = True
                break
        if not added or truncated:
            break
    logger.info(
        f"LP1* built with {len(rows)} projected cuts",
        extra={'structured_data': {'cuts': len(rows), 'subsets': len(models), 'skipped': skipped}}
    )
    return lp.with_rows(rows, kind='lp1star', cuts_added=len(rows), truncated=truncated,
                        subsets=len(models), skipped_subsets=skipped)


# Cover LPs

def build_lp4(systems: Sequence[FrozenSet[FrozenSet[int]]], categories: Sequence[FrozenSet[int]]) -> LinearProgram:
    """Fractional covering of categories by category systems: min sum y_L."""
    builder = LinearProgramBuilder('lp4', MINIMIZE)
    names = [builder.add_column(f"y[{i}]", 0, None) for i in range(len(systems))]
    for category in categories:
        coefs = {names[i]: 1 for i, system in enumerate(systems) if category in system}
        builder.add_row(f"cover[{category_name(category)}]", coefs, GE, 1)
    builder.set_objective({name: 1 for name in names})
    return builder.build()


def build_lp4_dual(systems: Sequence[FrozenSet[FrozenSet[int]]], categories: Sequence[FrozenSet[int]]) -> LinearProgram:
    """Dual of build_lp4: max sum pi_C with every system packing at most 1."""
    builder = LinearProgramBuilder('lp4d', MAXIMIZE)
    names = {category: builder.add_column(f"pi[{category_name(category)}]", 0, None) for category in categories}
    for i, system in enumerate(systems):
        coefs = {names[c]: 1 for c in categories if c in system}
        builder.add_row(f"system[{i}]", coefs, LE, 1)
    builder.set_objective({name: 1 for name in names.values()})
    return builder.build()


def build_lp5(a: Sequence[Sequence[Fraction]], counts: Sequence[int]) -> LinearProgram:
    """Per-type covering LP: min sum counts_j x_j subject to A x >= 1, x >= 0."""
    builder = LinearProgramBuilder('lp5', MINIMIZE)
    size = len(counts)
    names = [builder.add_column(f"x[{j + 1}]", 0, None) for j in range(size)]
    for i in range(size):
        builder.add_row(f"type[{i + 1}]", {names[j]: a[i][j] for j in range(size)}, GE, 1)
    builder.set_objective({names[j]: counts[j] for j in range(size)})
    return builder.build()


# CPLEX-LP output

_NAME_PATTERN = re.compile(r'[^A-Za-z0-9_.]')


def _format_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    # Terminating decimals only; callers scale rows beforehand.
    denominator = value.denominator
    for p in (2, 5):
        while denominator % p == 0:
            denominator //= p
    if denominator != 1:
        raise SolverError(f"{value} has no exact decimal form")
    digits = 0
    scaled = value
    while scaled.denominator != 1:
        scaled *= 10
        digits += 1
    text = f"{abs(scaled.numerator):0{digits + 1}d}"
    sign = '-' if value < 0 else ''
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def _decimal_scale(values: Iterable[Fraction]) -> int:
    scale = 1
    for value in values:
        denominator = value.denominator
        for p in (2, 5):
            while denominator % p == 0:
                denominator //= p
        scale = scale * denominator // math.gcd(scale, denominator)
    return scale


def _terms(coefs: Sequence[Tuple[str, Fraction]], names: Mapping[str, str], scale: int) -> str:
    parts = []
    for column, coef in coefs:
        value = coef * scale
        sign = '-' if value < 0 else '+'
        magnitude = abs(value)
        text = names[column] if magnitude == 1 else f"{_format_number(magnitude)} {names[column]}"
        parts.append(f"{sign} {text}")
    if not parts:
        return "0 " + next(iter(names.values()), 'x')
    joined = " ".join(parts)
    return joined[2:] if joined.startswith('+ ') else joined


def to_cplex_lp(lp: LinearProgram) -> str:
    """
    Render an LP in CPLEX-LP text format.

    Names are reduced to [A-Za-z0-9_.]; rows and the objective whose
    coefficients have no terminating decimal form are scaled by an integer,
    which is recorded in a comment.
    """
    names: Dict[str, str] = {}
    used = set()
    for name in lp.column_names + [row.name for row in lp.rows]:
        base = _NAME_PATTERN.sub('_', name).strip('_') or 'v'
        if base[0].isdigit() or base[0] == '.':
            base = 'v' + base
        candidate, suffix = base, 1
        while candidate in used:
            suffix += 1
            candidate = f"{base}_{suffix}"
        used.add(candidate)
        names[name] = candidate

    lines = [f"\\ {lp.name}"]
    objective_scale = _decimal_scale(coef for _, coef in lp.objective)
    if objective_scale != 1:
        lines.append(f"\\ objective scaled by {objective_scale}")
    lines.append("Maximize" if lp.sense == MAXIMIZE else "Minimize")
    lines.append(f" obj: {_terms(lp.objective, names, objective_scale)}")
    lines.append("Subject To")
    for row in lp.rows:
        scale = _decimal_scale([coef for _, coef in row.coefs] + [row.rhs])
        if scale != 1:
            lines.append(f"\\ row {names[row.name]} scaled by {scale}")
        lines.append(f" {names[row.name]}: {_terms(row.coefs, names, scale)} {row.sense} {_format_number(row.rhs * scale)}")
    lines.append("Bounds")
    for column in lp.columns:
        name = names[column.name]
        if column.lower is None and column.upper is None:
            lines.append(f" {name} free")
        elif column.lower is None:
            lines.append(f" -inf <= {name} <= {_format_number(column.upper)}")
        elif column.upper is None:
            lines.append(f" {name} >= {_format_number(column.lower)}")
        else:
            lines.append(f" {_format_number(column.lower)} <= {name} <= {_format_number(column.upper)}")
    lines.append("End")
    return "\n".join(lines) + "\n"
