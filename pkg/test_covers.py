#!/usr/bin/env python3
"""
Tests for (m, l)-covers: closed forms, labeled trees, laminar covers,
forest covers and structural covers.
"""
import os
import sys
from fractions import Fraction

import networkx as nx
import pytest

# Add current directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core import is_locally_laminar, max_overlap, restrict
from covers import (
    CYCLE,
    FOREST,
    LAMINAR_CATEGORY_UNION,
    SINGLE_SUBGRAPH_UNION,
    WHOLE_GRAPH,
    CoverPart,
    CoverPlan,
    LabeledTree,
    all_labeled_trees,
    alpha,
    category_counts,
    coefficients_a,
    detect_cover,
    forest_cover,
    laminar_cover,
    lp5_objective,
    plan_from_dict,
    plan_to_dict,
    structural_cover,
    tree_count,
    tree_family,
    tree_to_category_system,
    verify_plan,
    xtilde,
)
from errors import (
    BadArgumentsError,
    DepthExceededError,
    NonEmptyLaminarSystemError,
    NoStructureMatchedError,
    SparsityViolationError,
    TooManySubgraphsError,
    UnknownEdgeError,
)

SEVEN_CATEGORIES = {
    'nodes': [f"p{i}" for i in range(8)],
    'edges': [{'id': f"c{i}", 'u': f"p{i}", 'v': f"p{i + 1}", 'c': 1} for i in range(7)],
    'subgraphs': [
        {'id': 'H1', 'edges': ['c0', 'c3', 'c4', 'c6'], 'b': {}},
        {'id': 'H2', 'edges': ['c1', 'c3', 'c5', 'c6'], 'b': {}},
        {'id': 'H3', 'edges': ['c2', 'c4', 'c5', 'c6'], 'b': {}},
    ],
}


def _with_unit_bounds(document):
    for subgraph in document['subgraphs']:
        ends = set()
        for edge in document['edges']:
            if edge['id'] in subgraph['edges']:
                ends.update((edge['u'], edge['v']))
        subgraph['b'] = {node: 1 for node in sorted(ends)}
    return document


def _k4(build):
    nodes = ['a', 'b', 'c', 'd']
    edges = [{'id': u + v, 'u': u, 'v': v, 'c': 1} for i, u in enumerate(nodes) for v in nodes[i + 1:]]
    return build({'nodes': nodes, 'edges': edges})


def _edge_graph(inst, edge_ids):
    graph = nx.MultiGraph()
    graph.add_edges_from((inst.edge_map[e].u, inst.edge_map[e].v) for e in edge_ids)
    return graph


class TestClosedForms:
    """Test alpha, the coverage matrix and the LP5 solution."""

    @pytest.mark.parametrize('k, k_prime, expected', [
        (2, 2, Fraction(3, 2)),
        (3, 2, Fraction(2)),
        (3, 3, Fraction(7, 3)),
        (4, 2, Fraction(5, 2)),
        (5, 2, Fraction(3)),
        (5, 5, Fraction(13, 2)),
        (1, 1, Fraction(1)),
    ])
    def test_alpha_table(self, k, k_prime, expected):
        assert alpha(k, k_prime) == expected

    def test_alpha_single_overlap(self):
        assert all(alpha(k, 1) == 1 for k in range(1, 6))

    @pytest.mark.parametrize('k, k_prime', [(2, 3), (0, 0), (3, 0)])
    def test_alpha_bad_arguments(self, k, k_prime):
        with pytest.raises(BadArgumentsError):
            alpha(k, k_prime)

    def test_coefficients(self):
        assert coefficients_a(3, 3) == [[1, 1, 2], [0, 2, 2], [0, 0, 6]]
        assert all(coefficients_a(5, 5)[j][j] == [1, 2, 6, 24, 120][j] for j in range(5))

    def test_coefficients_by_counting(self):
        a = coefficients_a(3, 3)
        for j in range(1, 4):
            counts = category_counts(3, j)
            assert counts == [Fraction(a[i][j - 1]) for i in range(3)]

    def test_xtilde_values(self):
        assert xtilde(3, 3)[0] == [Fraction(1, 3), Fraction(1, 3), Fraction(1, 6)]
        assert xtilde(2, 2)[0] == [Fraction(1, 2), Fraction(1, 2)]
        assert xtilde(5, 2)[0] == [Fraction(1, 2), Fraction(1, 2)]
        assert lp5_objective(3, xtilde(3, 3)[1]) == Fraction(7, 3)

    def test_xtilde_solves_the_system(self):
        for k in range(1, 9):
            for k_prime in range(1, k + 1):
                a = coefficients_a(k, k_prime)
                x, x_plus = xtilde(k, k_prime)
                for row in a:
                    assert sum(coef * value for coef, value in zip(row, x)) == 1
                    assert sum(coef * value for coef, value in zip(row, x_plus)) >= 1
                assert lp5_objective(k, x_plus) == alpha(k, k_prime)
                for j in range(len(x) - 1):
                    if x[j + 1] < 0:
                        assert x[j] < 0


class TestLabeledTrees:
    """Test tree families and the category systems they represent."""

    def test_family_sizes(self):
        assert [len(tree_family(3, j)) for j in (1, 2, 3)] == [1, 3, 6]
        assert [tree_count(3, j) for j in (1, 2, 3)] == [1, 3, 6]
        assert len(tree_family(2, 2)) == 2

    def test_family_depth(self):
        for j in range(1, 5):
            assert all(tree.depth == j for tree in tree_family(4, j))

    def test_family_bad_arguments(self):
        with pytest.raises(BadArgumentsError):
            tree_family(3, 4)

    def test_path_system(self):
        tree = LabeledTree((0, 1))
        assert tree_to_category_system(tree, 2, 2) == frozenset([
            frozenset(), frozenset([1]), frozenset([1, 2]),
        ])

    def test_star_system(self):
        tree = LabeledTree((0, 0, 0))
        assert tree_to_category_system(tree, 3, 1) == frozenset([
            frozenset(), frozenset([1]), frozenset([2]), frozenset([3]),
        ])

    def test_depth_exceeded(self):
        with pytest.raises(DepthExceededError):
            tree_to_category_system(LabeledTree((0, 1)), 2, 1)

    def test_all_trees(self):
        assert len(all_labeled_trees(3)) == 16
        assert len(all_labeled_trees(1)) == 1
        assert len(all_labeled_trees(3, max_depth=1)) == 1


class TestLaminarCover:
    """Test the optimal laminar cover."""

    def test_two_subgraphs(self, figure):
        inst = figure('fig7')
        plan = laminar_cover(inst)
        assert plan.l == 2
        assert plan.ratio == Fraction(3, 2)
        assert sorted(sorted(part.edges) for part in plan.parts) == [
            ['e', 'f', 'h'], ['e', 'g'], ['f', 'g', 'h'],
        ]
        assert all(part.kind == LAMINAR_CATEGORY_UNION for part in plan.parts)
        assert verify_plan(inst, plan) == []

    def test_no_shared_edges(self, build):
        inst = build(_with_unit_bounds({
            'nodes': ['a', 'b', 'c'],
            'edges': [{'id': 'ab', 'u': 'a', 'v': 'b', 'c': 1}, {'id': 'bc', 'u': 'b', 'v': 'c', 'c': 1}],
            'subgraphs': [{'id': 'H1', 'edges': ['ab'], 'b': {}}, {'id': 'H2', 'edges': ['bc'], 'b': {}}],
        }))
        plan = laminar_cover(inst)
        assert plan.ratio == 1
        assert plan.part_kinds == [WHOLE_GRAPH]

    def test_three_subgraphs(self, build):
        inst = build(_with_unit_bounds(SEVEN_CATEGORIES))
        plan = laminar_cover(inst)
        assert plan.l == 6
        assert plan.ratio == Fraction(7, 3)
        assert len(plan.parts) == 10
        assert sorted(part.multiplicity for part in plan.parts) == [1] * 6 + [2] * 4
        assert verify_plan(inst, plan) == []

    def test_parts_are_locally_laminar(self, random_instances):
        for inst in random_instances(20, seed=13, k=3, laminar=False):
            plan = laminar_cover(inst)
            assert verify_plan(inst, plan) == []
            if inst.k:
                assert plan.ratio == alpha(inst.k, max(max_overlap(inst), 1))
            for part in plan.parts:
                assert is_locally_laminar(restrict(inst, part.edges))

    def test_subgraph_limit(self, figure):
        with pytest.raises(TooManySubgraphsError):
            laminar_cover(figure('fig7'), max_k=1)


class TestForestCover:
    """Test forest covers by matroid partition."""

    def test_k4_two_forests(self, build):
        inst = _k4(build)
        plan = forest_cover(inst, 2, 1)
        assert plan.m == 2 and plan.l == 1
        assert verify_plan(inst, plan) == []
        for part in plan.parts:
            assert nx.is_forest(nx.Graph(_edge_graph(inst, part.edges)))
            assert _edge_graph(inst, part.edges).number_of_edges() == len(part.edges)

    def test_triangle_is_not_a_forest(self, triangle):
        with pytest.raises(SparsityViolationError) as excinfo:
            forest_cover(triangle, 1, 1)
        error = excinfo.value
        assert error.witness == frozenset(['a', 'b', 'c'])
        assert error.l * error.induced > error.m * (len(error.witness) - 1)

    def test_triangle_double_cover(self, triangle):
        plan = forest_cover(triangle, 3, 2)
        assert plan.ratio == Fraction(3, 2)
        assert verify_plan(triangle, plan) == []
        assert all(len(part.edges) <= 2 for part in plan.parts)

    def test_grid_four_two_cover(self, build):
        names = [[f"g{r}{c}" for c in range(3)] for r in range(3)]
        edges = []
        for r in range(3):
            for c in range(3):
                if c < 2:
                    edges.append({'id': f"h{r}{c}", 'u': names[r][c], 'v': names[r][c + 1], 'c': 1})
                if r < 2:
                    edges.append({'id': f"v{r}{c}", 'u': names[r][c], 'v': names[r + 1][c], 'c': 1})
        inst = build({'nodes': [node for row in names for node in row], 'edges': edges})
        plan = forest_cover(inst, 4, 2)
        assert verify_plan(inst, plan) == []
        for part in plan.parts:
            if part.edges:
                assert nx.is_forest(nx.Graph(_edge_graph(inst, part.edges)))

    def test_bad_arguments(self, triangle):
        with pytest.raises(BadArgumentsError):
            forest_cover(triangle, 0, 1)

    def test_laminar_sets_rejected(self, figure):
        with pytest.raises(NonEmptyLaminarSystemError):
            forest_cover(figure('fig6'), 2, 1)


class TestStructuralCover:
    """Test covers for recognized graph shapes."""

    def test_pseudo_tree_even_cycle(self, figure):
        plan = structural_cover(figure('fig10a'))
        assert (plan.m, plan.l) == (5, 4)
        assert plan.part_kinds == [CYCLE] + [FOREST] * 4
        assert verify_plan(figure('fig10a'), plan) == []

    def test_pseudo_tree_odd_cycle(self, figure):
        plan = structural_cover(figure('fig10b'))
        assert (plan.m, plan.l) == (5, 4)
        assert plan.part_kinds == [FOREST] * 5

    def test_even_cycle(self, figure):
        plan = structural_cover(figure('fig7'))
        assert (plan.m, plan.l) == (1, 1)
        assert plan.part_kinds == [CYCLE]

    def test_forest(self, build):
        inst = build({
            'nodes': ['a', 'b', 'c'],
            'edges': [{'id': 'ab', 'u': 'a', 'v': 'b', 'c': 1}, {'id': 'bc', 'u': 'b', 'v': 'c', 'c': 1}],
        })
        assert structural_cover(inst).part_kinds == [FOREST]

    def test_cactus(self, build):
        inst = build({
            'nodes': ['a', 'b', 'c', 'd', 'e', 'f'],
            'edges': [
                {'id': 'ab', 'u': 'a', 'v': 'b', 'c': 1},
                {'id': 'bc', 'u': 'b', 'v': 'c', 'c': 1},
                {'id': 'ac', 'u': 'a', 'v': 'c', 'c': 1},
                {'id': 'cd', 'u': 'c', 'v': 'd', 'c': 1},
                {'id': 'de', 'u': 'd', 'v': 'e', 'c': 1},
                {'id': 'ef', 'u': 'e', 'v': 'f', 'c': 1},
                {'id': 'cf', 'u': 'c', 'v': 'f', 'c': 1},
            ],
        })
        plan = structural_cover(inst)
        assert (plan.m, plan.l) == (3, 2)
        assert verify_plan(inst, plan) == []
        for part in plan.parts:
            assert nx.is_forest(nx.Graph(_edge_graph(inst, part.edges)))

    def test_uniform_bounds(self, figure):
        inst = figure('fig6')
        plan = structural_cover(inst)
        assert (plan.m, plan.l) == (3, 2)
        assert plan.part_kinds == [SINGLE_SUBGRAPH_UNION] * 3
        assert verify_plan(inst, plan) == []

    def test_nothing_matches(self, build):
        with pytest.raises(NoStructureMatchedError):
            structural_cover(_k4(build))


class TestPlans:
    """Test plan checking, strategies and the JSON form."""

    def test_plain_lists(self, figure):
        inst = figure('fig7')
        plan = plan_from_dict({'l': 1, 'parts': [['e', 'f'], ['g', 'h']]})
        assert plan.part_kinds == [WHOLE_GRAPH, WHOLE_GRAPH]
        assert verify_plan(inst, plan) == []
        doubled = CoverPlan(plan.parts, 2)
        assert verify_plan(inst, doubled) == ['e', 'f', 'g', 'h']

    def test_round_trip(self, figure):
        plan = laminar_cover(figure('fig7'))
        data = plan_to_dict(plan)
        assert data['ratio'] == '3/2'
        assert plan_from_dict(data) == plan

    def test_unknown_edge(self, figure):
        plan = CoverPlan((CoverPart(frozenset(['zz']), WHOLE_GRAPH),), 1)
        with pytest.raises(UnknownEdgeError):
            verify_plan(figure('fig7'), plan)

    def test_bad_plan(self):
        with pytest.raises(BadArgumentsError):
            plan_from_dict({'l': 0, 'parts': []})
        with pytest.raises(BadArgumentsError):
            plan_from_dict({'parts': []})

    def test_strategies(self, build, figure):
        assert detect_cover(_k4(build), 'forest:2,1').ratio == 2
        assert detect_cover(figure('fig10a'), 'structural').ratio == Fraction(5, 4)
        assert detect_cover(figure('fig7'), 'laminar').ratio == Fraction(3, 2)
        for strategy in ('forest:x', 'nope'):
            with pytest.raises(BadArgumentsError):
                detect_cover(figure('fig7'), strategy)
