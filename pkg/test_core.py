#!/usr/bin/env python3
"""
Tests for the instance model: validation, feasibility, restriction and
the structural predicates.
"""
import os
import random
import sys
from collections import Counter

import pytest

# Add current directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from conftest import random_instance
from core import (
    CAPACITY,
    DEGREE_SUM,
    DUPLICATE_ID,
    INFINITE,
    LOOP_EDGE,
    MISSING_DEGREE_BOUND,
    NEGATIVE_VALUE,
    NON_LAMINAR_FAMILY,
    SUBGRAPH_DEGREE,
    UNKNOWN_NODE,
    Assignment,
    Edge,
    Instance,
    LaminarConstraint,
    SubgraphConstraint,
    Violation,
    bound_min,
    category_partition,
    constraint_rows,
    edge_categories,
    effective_capacities,
    is_feasible,
    is_infinite,
    is_laminar_family,
    is_laminar_family_pairwise,
    is_locally_laminar,
    max_overlap,
    restrict,
    validate_instance,
)
from errors import InstanceValidationError, UnboundedError, UnknownEdgeError
from exact import brute_force_opt


class TestInfinite:
    """Test the symbolic unbounded value."""

    def test_compares_above_numbers(self):
        assert INFINITE > 10 ** 12
        assert 3 < INFINITE
        assert not INFINITE < 5
        assert INFINITE == INFINITE

    def test_bound_min(self):
        assert bound_min([]) is INFINITE
        assert bound_min([INFINITE, 3, 7]) == 3
        assert bound_min([INFINITE, INFINITE]) is INFINITE


class TestValidation:
    """Test instance invariant checks."""

    def test_figure_is_valid(self, figure):
        inst = figure('fig7')
        assert validate_instance(inst) is inst
        assert inst.k == 2

    def test_collects_every_issue(self):
        raw = Instance(
            nodes=('a', 'b', 'a'),
            edges=(
                Edge('loop', 'a', 'a'),
                Edge('ghost', 'a', 'z'),
                Edge('neg', 'a', 'b', w=-1),
            ),
        )
        with pytest.raises(InstanceValidationError) as excinfo:
            validate_instance(raw)
        kinds = excinfo.value.kinds
        assert DUPLICATE_ID in kinds
        assert LOOP_EDGE in kinds
        assert UNKNOWN_NODE in kinds
        assert NEGATIVE_VALUE in kinds

    def test_missing_degree_bound(self):
        raw = Instance(
            nodes=('a', 'b'),
            edges=(Edge('ab', 'a', 'b', c=1),),
            subgraphs=(SubgraphConstraint('H1', frozenset(['ab']), {'a': 1}),),
        )
        with pytest.raises(InstanceValidationError) as excinfo:
            validate_instance(raw)
        assert excinfo.value.kinds == [MISSING_DEGREE_BOUND]

    def test_crossing_laminar_sets(self):
        raw = Instance(
            nodes=('a', 'b', 'c'),
            edges=(),
            laminar_sets=(
                LaminarConstraint('L1', frozenset(['a', 'b']), 1),
                LaminarConstraint('L2', frozenset(['b', 'c']), 1),
            ),
        )
        with pytest.raises(InstanceValidationError) as excinfo:
            validate_instance(raw)
        assert excinfo.value.issues[0].kind == NON_LAMINAR_FAMILY
        assert excinfo.value.issues[0].location == ('L1', 'L2')


class TestLaminarFamily:
    """Test the fast laminarity check against the pairwise reference."""

    def test_nested_family(self):
        sets = [frozenset('ab'), frozenset('a'), frozenset('abc'), frozenset('d')]
        assert is_laminar_family(sets) is None
        assert is_laminar_family_pairwise(sets) is None

    def test_agrees_with_pairwise_on_random_families(self):
        rng = random.Random(11)
        for _ in range(200):
            sets = [frozenset(rng.sample('abcdef', rng.randint(1, 4))) for _ in range(rng.randint(1, 5))]
            fast = is_laminar_family(sets)
            slow = is_laminar_family_pairwise(sets)
            assert (fast is None) == (slow is None)
            if fast is not None:
                a, b = sets[fast[0]], sets[fast[1]]
                assert a & b and not (a <= b or b <= a)


class TestFeasibility:
    """Test violation reporting."""

    def test_zero_is_feasible(self, figure):
        inst = figure('fig7')
        assert is_feasible(inst, Assignment.zero(inst)) == []

    def test_subgraph_degree_violation(self, figure):
        inst = figure('fig7')
        violations = is_feasible(inst, {'e': 1, 'f': 1})
        assert violations == [Violation(SUBGRAPH_DEGREE, ('H2', 's1'), 1)]

    def test_capacity_violation(self, figure):
        inst = figure('fig7')
        violations = is_feasible(inst, {'g': 2})
        assert Violation(CAPACITY, 'g', 1) in violations

    def test_induced_edges_count_twice(self, build):
        inst = build({
            'nodes': ['a', 'b'],
            'edges': [{'id': 'ab', 'u': 'a', 'v': 'b'}],
            'laminar': [{'id': 'L', 'nodes': ['a', 'b'], 'g': 3}],
        })
        rows = constraint_rows(inst)
        assert rows[0].coefs == {'ab': 2}
        assert is_feasible(inst, {'ab': 1}) == []
        assert is_feasible(inst, {'ab': 2}) == [Violation(DEGREE_SUM, 'L', 1)]
        assert effective_capacities(inst) == {'ab': 1}

    def test_from_values_rejects_unknown_edges(self, figure):
        inst = figure('fig7')
        with pytest.raises(UnknownEdgeError):
            Assignment.from_values(inst, {'zz': 1})

    def test_objective_and_support(self, figure):
        inst = figure('fig7')
        assignment = Assignment.from_values(inst, {'f': 1, 'h': 1})
        assert assignment.objective == 2
        assert assignment.support() == ['f', 'h']
        assert assignment.x['e'] == 0


def _violations_by_definition(inst, values):
    """Excess per constraint computed straight from the instance fields."""
    found = Counter()
    for edge in inst.edges:
        value = values.get(edge.id, 0)
        if value < 0:
            found[(CAPACITY, edge.id, -value)] += 1
        if not is_infinite(edge.c) and value > edge.c:
            found[(CAPACITY, edge.id, value - edge.c)] += 1
    for subgraph in inst.subgraphs:
        for node, bound in subgraph.b.items():
            load = sum(
                values.get(edge.id, 0) for edge in inst.edges
                if edge.id in subgraph.edge_ids and node in (edge.u, edge.v)
            )
            if load > bound:
                found[(SUBGRAPH_DEGREE, (subgraph.id, node), load - bound)] += 1
    for lam in inst.laminar_sets:
        if is_infinite(lam.g):
            continue
        load = sum(
            values.get(edge.id, 0) * ((edge.u in lam.node_ids) + (edge.v in lam.node_ids))
            for edge in inst.edges
        )
        if load > lam.g:
            found[(DEGREE_SUM, lam.id, load - lam.g)] += 1
    return found


class TestFeasibilityProperties:
    """Test feasibility against a row-by-row recount and under restriction."""

    def test_matches_recount(self):
        rng = random.Random(53)
        infeasible = 0
        for _ in range(250):
            inst = random_instance(rng, k=3)
            for _ in range(4):
                values = {edge_id: rng.choice((0, 0, 0, 1, 1, 2, 3, -1)) for edge_id in inst.edge_ids}
                violations = is_feasible(inst, values)
                expected = _violations_by_definition(inst, values)
                assert Counter((v.kind, v.location, v.amount) for v in violations) == expected
                infeasible += bool(violations)
        assert infeasible > 0

    def test_restriction_keeps_feasibility(self):
        rng = random.Random(59)
        checked = 0
        for _ in range(150):
            inst = random_instance(rng, k=3)
            keep = [edge_id for edge_id in inst.edge_ids if rng.random() < 0.6]
            part = restrict(inst, keep)
            candidates = [
                Assignment.from_values(part, {edge_id: rng.choice((0, 0, 1, 2)) for edge_id in keep}),
                brute_force_opt(part),
            ]
            for assignment in candidates:
                if is_feasible(part, assignment):
                    continue
                extended = assignment.extend(inst)
                assert is_feasible(inst, extended) == []
                assert extended.objective == assignment.objective
                assert all(extended.x[edge_id] == 0 for edge_id in inst.edge_ids if edge_id not in keep)
                checked += 1
        assert checked >= 150


class TestStructure:
    """Test restriction, categories and local laminarity."""

    def test_restrict_drops_untouched_bounds(self, figure):
        inst = figure('fig7')
        sub = restrict(inst, ['e', 'g'])
        assert [edge.id for edge in sub.edges] == ['e', 'g']
        by_id = {subgraph.id: subgraph for subgraph in sub.subgraphs}
        assert by_id['H1'].edge_ids == frozenset(['g'])
        assert set(by_id['H1'].b) == {'s2', 't2'}
        assert by_id['H2'].edge_ids == frozenset(['e'])
        validate_instance(sub)

    def test_restrict_to_nothing(self, figure):
        sub = restrict(figure('fig7'), [])
        assert sub.edges == ()
        assert sub.subgraphs == ()

    def test_categories(self, figure):
        inst = figure('fig7')
        categories = edge_categories(inst)
        assert categories == {
            'e': frozenset([2]),
            'f': frozenset([1, 2]),
            'g': frozenset([1]),
            'h': frozenset([1, 2]),
        }
        assert category_partition(inst)[frozenset([1, 2])] == frozenset(['f', 'h'])
        assert max_overlap(inst) == 2

    def test_locally_laminar_figure(self, figure):
        assert is_locally_laminar(figure('fig7'))

    def test_crossing_traces_witness(self, build):
        inst = build({
            'nodes': ['p', 'q', 'r', 'v'],
            'edges': [
                {'id': 'vp', 'u': 'v', 'v': 'p', 'c': 1},
                {'id': 'vq', 'u': 'v', 'v': 'q', 'c': 1},
                {'id': 'vr', 'u': 'v', 'v': 'r', 'c': 1},
            ],
            'subgraphs': [
                {'id': 'H1', 'edges': ['vp', 'vq'], 'b': {'v': 1, 'p': 1, 'q': 1}},
                {'id': 'H2', 'edges': ['vq', 'vr'], 'b': {'v': 1, 'q': 1, 'r': 1}},
            ],
        })
        report = is_locally_laminar(inst)
        assert not report
        assert report.witness == ('v', 'H1', 'H2')


class TestEffectiveCapacities:
    """Test finite bounds for the exact solvers."""

    def test_subgraph_bounds_apply(self, figure):
        caps = effective_capacities(figure('fig2'))
        assert all(value == 1 for value in caps.values())

    def test_unbounded_weighted_edge(self, build):
        inst = build({'nodes': ['a', 'b'], 'edges': [{'id': 'ab', 'u': 'a', 'v': 'b'}]})
        with pytest.raises(UnboundedError):
            effective_capacities(inst)

    def test_unbounded_zero_weight_edge(self, build):
        inst = build({'nodes': ['a', 'b'], 'edges': [{'id': 'ab', 'u': 'a', 'v': 'b', 'w': 0}]})
        assert effective_capacities(inst) == {'ab': 0}
