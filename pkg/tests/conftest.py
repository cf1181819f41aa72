"""Shared fixtures: the worked-example data and a random DAG sampler.

Node ``v_i`` of the worked example is node id ``i - 1`` throughout.
"""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from reachratio.graph import Dag, condense, parse_edge_list
from reachratio.labels import HopLabels

DATA = Path(__file__).parent / "data"


def v(*ids: int) -> list[int]:
    """Worked-example names v1..v15 to node ids."""
    return [i - 1 for i in ids]


# Published L^1, L^2, L^3 for v1..v15: (out, in) per node.
LABEL_ROWS = {
    1: [
        ([1], [1]), ([], [1]), ([], []), ([1], []), ([], []), ([1], []), ([], [1]), ([], []),
        ([], [1]), ([], [1]), ([1], []), ([], []), ([], [1]), ([], []), ([], [1]),
    ],
    2: [
        ([1], [1]), ([2], [1, 2]), ([2], []), ([1], []), ([2], []), ([1], []), ([], [1]), ([], []),
        ([], [1]), ([], [1, 2]), ([1], []), ([2], []), ([], [1, 2]), ([], []), ([], [1, 2]),
    ],
    3: [
        ([1], [1]), ([2], [1, 2]), ([2, 3], [3]), ([1, 3], []), ([2, 3], []), ([1, 3], []),
        ([], [1, 3]), ([], [3]), ([], [1, 3]), ([], [1, 2]), ([1, 3], []), ([2], []),
        ([], [1, 2]), ([], [3]), ([], [1, 2]),
    ],
}

# A_i, D_i of the first three hop-nodes. D_2 lists v15: the labels above put
# rank 2 on v15, not v14, so a published {v2, v10, v13, v14} is a typo.
SETS = [
    (v(1, 4, 6, 11), v(1, 2, 7, 9, 10, 13, 15)),
    (v(2, 3, 5, 12), v(2, 10, 13, 15)),
    (v(3, 4, 5, 6, 11), v(3, 7, 8, 9, 14)),
]

# set ids (id_anc, id_desc) of v1..v15 after each of the first three steps
SET_IDS = {
    1: ([1, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0], [1, 1, 0, 0, 0, 0, 1, 0, 1, 1, 0, 0, 1, 0, 1]),
    2: ([1, 2, 2, 1, 2, 1, 0, 0, 0, 0, 1, 2, 0, 0, 0], [1, 2, 0, 0, 0, 0, 1, 0, 1, 2, 0, 0, 2, 0, 2]),
    3: ([1, 2, 3, 4, 3, 4, 0, 0, 0, 0, 4, 2, 0, 0, 0], [1, 2, 3, 0, 0, 0, 4, 3, 4, 2, 0, 0, 2, 3, 2]),
}

TC_EXAMPLE = 70


def table_labels(k: int, bitset: bool | None = None) -> HopLabels:
    if k == 0:
        return HopLabels(15, bitset)
    rows = LABEL_ROWS[k]
    return HopLabels.from_lists(v(*range(1, k + 1)), [r[0] for r in rows], [r[1] for r in rows], bitset)


@pytest.fixture
def label_seq() -> list[HopLabels]:
    """L^0 .. L^3 as published."""
    return [table_labels(k) for k in range(4)]


@pytest.fixture(scope="session")
def example_dag() -> Dag:
    with open(DATA / "worked_example.txt") as fp:
        return condense(parse_edge_list(fp))


def random_dag(rng: random.Random, n: int, p: float) -> Dag:
    """Random DAG over a shuffled hidden order, so ids are not topologically sorted."""
    order = list(range(n))
    rng.shuffle(order)
    edges = [(order[i], order[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Dag.from_edges(n, edges)


def random_digraph(rng: random.Random, n: int, p: float) -> list[tuple[int, int]]:
    return [(a, b) for a in range(n) for b in range(n) if a != b and rng.random() < p]


def dag_suite(count: int, max_n: int, seed: int = 7):
    """``count`` random DAGs with node counts in [1, max_n] and densities swept."""
    rng = random.Random(seed)
    densities = [0.02, 0.05, 0.1, 0.2, 0.35, 0.6]
    for i in range(count):
        n = rng.randint(1, max_n)
        yield random_dag(rng, n, densities[i % len(densities)])


@pytest.fixture(scope="session")
def small_dags() -> list[Dag]:
    return list(dag_suite(60, 25, seed=11))
