#!/usr/bin/env python3
"""
Tests for the exact LP layer: simplex, LP1, LP3, odd-set cuts, LP1*, the
cover LPs and the CPLEX-LP writer.
"""
import itertools
import os
import random
import sys
import time
from fractions import Fraction

import pytest

# Add current directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core import category_partition, is_locally_laminar, restrict
from covers import alpha, cover_systems, pi_tilde
from errors import BadArgumentsError, NotLocallyLaminarError, TooLargeError
from exact import brute_force_opt
from lp import (
    EQ,
    GE,
    INFEASIBLE,
    LE,
    MINIMIZE,
    OPTIMAL,
    UNBOUNDED,
    BidirectedSystem,
    LinearProgramBuilder,
    build_lp1,
    build_lp1_star,
    build_lp3,
    build_lp4,
    build_lp4_dual,
    enumerate_blossom_cuts,
    iter_blossom_cuts,
    lp3_with_blossom_closure,
    maximal_laminar_category_unions,
    simplex_solve,
    to_cplex_lp,
    verify_solution,
    x_name,
)


def _single_column(lower=0, upper=None, rows=()):
    builder = LinearProgramBuilder('tiny')
    builder.add_column('x', lower, upper)
    for name, sense, rhs in rows:
        builder.add_row(name, {'x': 1}, sense, rhs)
    builder.set_objective({'x': 1})
    return builder.build()


def _category_star(build, k, max_size):
    """One hub edge per category of size 1..max_size over k subgraphs."""
    categories = [
        combo for size in range(1, max_size + 1)
        for combo in itertools.combinations(range(1, k + 1), size)
    ]
    leaves = [f"leaf{n}" for n in range(len(categories))]
    subgraphs = []
    for index in range(1, k + 1):
        members = [n for n, combo in enumerate(categories) if index in combo]
        bounds = {'hub': 2}
        bounds.update({leaves[n]: 1 for n in members})
        subgraphs.append({'id': f"H{index}", 'edges': [f"e{n}" for n in members], 'b': bounds})
    return build({
        'nodes': ['hub'] + leaves,
        'edges': [{'id': f"e{n}", 'u': 'hub', 'v': leaf, 'c': 1} for n, leaf in enumerate(leaves)],
        'subgraphs': subgraphs,
    })


class TestSimplex:
    """Test the rational simplex solver."""

    def test_bounded_column(self):
        result = simplex_solve(_single_column(upper=1))
        assert result.status == OPTIMAL
        assert result.optimum == 1

    def test_infeasible(self):
        result = simplex_solve(_single_column(rows=[('low', GE, 2), ('high', LE, 1)]))
        assert result.status == INFEASIBLE

    def test_unbounded(self):
        assert simplex_solve(_single_column()).status == UNBOUNDED

    def test_equality_and_minimize(self):
        builder = LinearProgramBuilder('mix', MINIMIZE)
        builder.add_column('a')
        builder.add_column('b')
        builder.add_row('sum', {'a': 1, 'b': 1}, EQ, 3)
        builder.add_row('cap', {'a': 1}, LE, Fraction(1, 2))
        builder.set_objective({'a': 2, 'b': 3})
        result = simplex_solve(builder.build())
        assert result.optimum == Fraction(17, 2)
        assert result.solution == {'a': Fraction(1, 2), 'b': Fraction(5, 2)}

    def test_builder_rejects_unknown_columns(self):
        builder = LinearProgramBuilder('bad')
        builder.add_column('x')
        with pytest.raises(BadArgumentsError):
            builder.add_row('r', {'y': 1}, LE, 1)
        with pytest.raises(BadArgumentsError):
            builder.add_column('x')


class TestLp1:
    """Test the natural relaxation."""

    @pytest.mark.parametrize('name, optimum', [
        ('fig6', Fraction(3, 2)),
        ('fig8', Fraction(3, 2)),
        ('fig10a', Fraction(5, 2)),
        ('fig10b', Fraction(5, 2)),
    ])
    def test_figure_optima(self, figure, name, optimum):
        assert simplex_solve(build_lp1(figure(name))).optimum == optimum

    def test_half_integral_point(self, figure):
        result = simplex_solve(build_lp1(figure('fig6')))
        assert all(value == Fraction(1, 2) for value in result.solution.values())

    def test_rows_and_columns(self, figure):
        lp = build_lp1(figure('fig6'))
        assert lp.column_names == [x_name('ts1'), x_name('ts2'), x_name('ts3')]
        assert len(lp.rows) == 7

    def test_relaxation_is_sound(self, random_instances):
        for inst in random_instances(30, seed=5):
            assert simplex_solve(build_lp1(inst)).optimum >= brute_force_opt(inst).objective


class TestLp3:
    """Test the extended formulation of locally laminar instances."""

    def test_bidirected_columns(self, figure):
        model = build_lp3(figure('fig7'))
        for j in range(len(model.system.column_names)):
            assert sum(abs(row[j]) for row in model.system.matrix) <= 2

    def test_same_optimum_as_lp1(self, figure):
        inst = figure('fig7')
        assert simplex_solve(build_lp3(inst).lp).optimum == simplex_solve(build_lp1(inst)).optimum

    def test_random_locally_laminar_instances(self, random_instances):
        checked = 0
        for inst in random_instances(60, seed=17, laminar=False):
            if not is_locally_laminar(inst):
                continue
            lp1 = simplex_solve(build_lp1(inst)).optimum
            lp3 = simplex_solve(build_lp3(inst).lp).optimum
            assert lp1 == lp3
            checked += 1
        assert checked >= 10

    def test_rejects_crossing_traces(self, build):
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
        with pytest.raises(NotLocallyLaminarError):
            build_lp3(inst)


class TestOddSetCuts:
    """Test enumeration and separation of odd-set inequalities."""

    def test_triangle_cut(self, triangle):
        model = build_lp3(triangle)
        cuts = enumerate_blossom_cuts(model.system)
        edge_cut = {(x_name('ab'), Fraction(1)), (x_name('ac'), Fraction(1)), (x_name('bc'), Fraction(1))}
        assert any(set(cut.coefs) == edge_cut and cut.rhs == 1 for cut in cuts)

    def test_cuts_hold_on_integer_points(self, triangle):
        model = build_lp3(triangle)
        cuts = enumerate_blossom_cuts(model.system)
        for values in itertools.product((0, 1), repeat=3):
            x = dict(zip([x_name('ab'), x_name('ac'), x_name('bc')], map(Fraction, values)))
            point = model.lift(x)
            if verify_solution(model.lp, point):
                continue
            assert all(cut.activity(point) <= cut.rhs for cut in cuts)

    def test_even_bounds_give_no_cuts(self):
        system = BidirectedSystem(
            row_names=('r1',),
            column_names=('x', 'y'),
            matrix=((1, 1),),
            a=(None,),
            b=(2,),
            c=(2, 2),
            d=(0, 0),
        )
        assert enumerate_blossom_cuts(system) == []

    def test_column_sum_check(self):
        with pytest.raises(BadArgumentsError):
            BidirectedSystem(
                row_names=('r1', 'r2', 'r3'),
                column_names=('x',),
                matrix=((1,), (1,), (1,)),
                a=(None, None, None),
                b=(1, 1, 1),
                c=(1,),
                d=(0,),
            )

    def test_size_limit(self, triangle):
        with pytest.raises(TooLargeError):
            enumerate_blossom_cuts(build_lp3(triangle).system, row_limit=2)

    def test_cut_limit(self, triangle):
        system = build_lp3(triangle).system
        generated = sum(1 for _ in iter_blossom_cuts(system))
        assert enumerate_blossom_cuts(system, cut_limit=generated)
        with pytest.raises(TooLargeError):
            enumerate_blossom_cuts(system, cut_limit=generated - 1)

    def test_closure_is_integral(self, triangle, figure):
        result, cuts = lp3_with_blossom_closure(triangle)
        assert result.optimum == 1
        assert cuts
        result, _ = lp3_with_blossom_closure(figure('fig7'))
        assert result.optimum == 2

    def test_closure_matches_brute_force(self, random_instances):
        checked = 0
        for inst in random_instances(100, seed=41, nodes=4, edges=4, laminar=False):
            if not is_locally_laminar(inst):
                continue
            try:
                result, _ = lp3_with_blossom_closure(inst)
            except TooLargeError:
                continue
            assert result.optimum == brute_force_opt(inst).objective
            checked += 1
        assert checked >= 20


class TestLp1Star:
    """Test LP1 strengthened by projected cuts."""

    def test_zero_budget_is_lp1(self, figure):
        inst = figure('fig6')
        assert build_lp1_star(inst, cut_budget=0).same_model(build_lp1(inst))

    def test_locally_laminar_instance_is_integral(self, triangle):
        lp = build_lp1_star(triangle)
        assert simplex_solve(lp).optimum == 1
        assert lp.metadata['cuts_added'] >= 1

    def test_sandwiched_on_gap_figure(self, figure):
        optimum = simplex_solve(build_lp1_star(figure('fig6'))).optimum
        assert 1 <= optimum <= Fraction(3, 2)

    def test_sandwiched_on_random_instances(self, random_instances):
        for inst in random_instances(40, seed=61, nodes=5, edges=5, k=3):
            relaxed = simplex_solve(build_lp1(inst)).optimum
            strengthened = simplex_solve(build_lp1_star(inst, row_limit=8)).optimum
            assert relaxed >= strengthened >= brute_force_opt(inst).objective

    def test_unions_are_maximal_laminar(self, build):
        inst = _category_star(build, k=4, max_size=2)
        unions = maximal_laminar_category_unions(inst, budget=10 ** 6)
        assert unions
        assert len(set(unions)) == len(unions)
        for edges in unions:
            assert is_locally_laminar(restrict(inst, edges))
            for extra in set(inst.edge_ids) - edges:
                assert not is_locally_laminar(restrict(inst, edges | {extra}))

    def test_many_categories_stay_fast(self, build):
        inst = _category_star(build, k=5, max_size=3)
        assert len(category_partition(inst)) == 25
        start = time.perf_counter()
        unions = maximal_laminar_category_unions(inst)
        assert time.perf_counter() - start < 10
        assert 0 < len(unions) <= 64
        lp = build_lp1_star(inst, cut_budget=10, row_limit=8)
        assert time.perf_counter() - start < 60
        assert simplex_solve(lp).optimum <= simplex_solve(build_lp1(inst)).optimum


class TestCoverLps:
    """Test the fractional cover LP against its closed form."""

    @pytest.mark.parametrize('k, k_prime', [
        (k, k_prime) for k in range(1, 5) for k_prime in range(1, k + 1)
    ])
    def test_lp4_matches_alpha(self, k, k_prime):
        systems, categories = cover_systems(k, k_prime)
        primal = simplex_solve(build_lp4(systems, categories)).optimum
        dual = simplex_solve(build_lp4_dual(systems, categories)).optimum
        assert primal == alpha(k, k_prime)
        assert dual == primal

    def test_pi_tilde_is_dual_feasible(self):
        k, k_prime = 3, 3
        systems, categories = cover_systems(k, k_prime)
        pi = pi_tilde(k, k_prime)
        for system in systems:
            assert sum(pi[c] for c in categories if c in system) <= 1
        assert sum(pi.values()) == alpha(k, k_prime)


class TestCplexWriter:
    """Test the CPLEX-LP text output."""

    def test_sections(self, figure):
        text = to_cplex_lp(build_lp1(figure('fig6')))
        lines = text.splitlines()
        assert lines[1] == "Maximize"
        assert lines[2] == " obj: x_ts1 + x_ts2 + x_ts3"
        assert "Subject To" in lines
        assert " deg_H1_t: x_ts1 + x_ts2 <= 1" in lines
        assert " 0 <= x_ts1 <= 1" in lines
        assert lines[-1] == "End"

    def test_fractional_row_is_scaled(self):
        builder = LinearProgramBuilder('scaled')
        builder.add_column('a', 0, None)
        builder.add_row('r', {'a': Fraction(1, 3)}, LE, 1)
        builder.set_objective({'a': 1})
        text = to_cplex_lp(builder.build())
        assert "\\ row r scaled by 3" in text
        assert " r: a <= 3" in text
        assert " a >= 0" in text

    def test_random_names_are_sanitized(self):
        rng = random.Random(2)
        builder = LinearProgramBuilder('names')
        for i in range(5):
            builder.add_column(f"x[{rng.choice('ab')}:{i}]", 0, 1)
        builder.set_objective({name: 1 for name in builder.columns})
        text = to_cplex_lp(builder.build())
        assert '[' not in text.split("\n", 1)[1]
