"""
Shared fixtures for the simultaneous assignment test suite.
"""
import os
import random
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core import Edge, Instance, LaminarConstraint, SubgraphConstraint, validate_instance
from instance_io import instance_from_dict, load_instance

FIGURES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'figures')

collect_ignore = ["examples"]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: exhaustive checks that take minutes; deselect with -m \"not slow\"")


@pytest.fixture
def figure():
    """Load a figure instance by file stem, e.g. figure('fig6')."""
    def load(name: str) -> Instance:
        return load_instance(os.path.join(FIGURES_DIR, f"{name}.json"))
    return load


@pytest.fixture
def figure_path():
    def path(name: str) -> str:
        return os.path.join(FIGURES_DIR, name)
    return path


@pytest.fixture
def build():
    """Build an instance from the JSON dialect without touching the disk."""
    return instance_from_dict


@pytest.fixture
def triangle():
    """Triangle b-matching with b = 1: LP optimum 3/2, integer optimum 1."""
    return instance_from_dict({
        'nodes': ['a', 'b', 'c'],
        'edges': [
            {'id': 'ab', 'u': 'a', 'v': 'b', 'c': 1},
            {'id': 'bc', 'u': 'b', 'v': 'c', 'c': 1},
            {'id': 'ac', 'u': 'a', 'v': 'c', 'c': 1},
        ],
        'subgraphs': [{'id': 'H1', 'edges': ['ab', 'ac', 'bc'], 'b': {'a': 1, 'b': 1, 'c': 1}}],
    })


def random_subgraphs(rng: random.Random, edge_list, k: int):
    """Up to k subgraphs, each edge kept with probability 0.6, bounds 1 or 2."""
    subgraphs = []
    for index in range(1, k + 1):
        chosen = [edge for edge in edge_list if rng.random() < 0.6]
        if not chosen:
            continue
        incident = sorted({node for edge in chosen for node in edge.endpoints()})
        subgraphs.append(SubgraphConstraint(
            id=f"H{index}",
            edge_ids=frozenset(edge.id for edge in chosen),
            b={node: rng.randint(1, 2) for node in incident},
        ))
    return subgraphs


def random_instance(rng: random.Random, nodes: int = 5, edges: int = 6, k: int = 2,
                    max_capacity: int = 2, laminar: bool = True, bipartite: bool = False) -> Instance:
    """Small random instance with finite capacities."""
    names = [f"v{i}" for i in range(nodes)]
    left = names[:nodes // 2]
    right = names[nodes // 2:]
    edge_list = []
    for index in range(edges):
        if bipartite:
            u, v = rng.choice(left), rng.choice(right)
        else:
            u, v = rng.sample(names, 2)
        edge_list.append(Edge(
            id=f"e{index}",
            u=u,
            v=v,
            w=rng.randint(0, 3),
            c=rng.randint(1, max_capacity),
        ))
    subgraphs = random_subgraphs(rng, edge_list, k)
    laminar_sets = []
    if laminar and rng.random() < 0.5:
        side = left if bipartite else names
        members = frozenset(rng.sample(side, min(2, len(side))))
        laminar_sets.append(LaminarConstraint('L1', members, rng.randint(1, 3)))
    return validate_instance(Instance(
        nodes=tuple(names),
        edges=tuple(edge_list),
        subgraphs=tuple(subgraphs),
        laminar_sets=tuple(laminar_sets),
    ))


def random_pseudo_tree(rng: random.Random, nodes: int = 6, k: int = 3, max_capacity: int = 2) -> Instance:
    """Random tree plus one edge closing a cycle of length at least 3."""
    names = [f"v{i}" for i in range(nodes)]
    pairs = [(names[i], names[rng.randrange(i)]) for i in range(1, nodes)]
    adjacent = {frozenset(pair) for pair in pairs}
    extra = rng.choice([
        (u, v) for i, u in enumerate(names) for v in names[i + 1:]
        if frozenset((u, v)) not in adjacent
    ])
    edge_list = [
        Edge(id=f"e{index}", u=u, v=v, w=rng.randint(0, 3), c=rng.randint(1, max_capacity))
        for index, (u, v) in enumerate(pairs + [extra])
    ]
    return validate_instance(Instance(
        nodes=tuple(names),
        edges=tuple(edge_list),
        subgraphs=tuple(random_subgraphs(rng, edge_list, k)),
        laminar_sets=(),
    ))


@pytest.fixture
def random_instances():
    """Seeded generator of small random instances."""
    def make(count: int, seed: int = 7, **kwargs):
        rng = random.Random(seed)
        return [random_instance(rng, **kwargs) for _ in range(count)]
    return make
