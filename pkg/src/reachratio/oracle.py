"""Brute-force ground truth: reachability, TC size, label coverage, partitions.

These are deliberately simple and quadratic. They back the tests and supply
TC(G) to the ratio engines for graphs of moderate size.
"""

from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import UsageError
from .graph import Dag
from .labels import HopLabels


def reach(dag: Dag, u: int, v: int) -> bool:
    """True iff ``v`` is reachable from ``u`` (every node reaches itself)."""
    dag.check_node(u)
    dag.check_node(v)
    if u == v:
        return True
    seen = {u}
    queue = deque([u])
    while queue:
        w = queue.popleft()
        for x in dag.fwd_adj[w]:
            if x == v:
                return True
            if x not in seen:
                seen.add(x)
                queue.append(x)
    return False


def descendants(dag: Dag, u: int) -> set[int]:
    """out*(u) without ``u`` itself."""
    seen = {u}
    queue = deque([u])
    while queue:
        w = queue.popleft()
        for x in dag.fwd_adj[w]:
            if x not in seen:
                seen.add(x)
                queue.append(x)
    seen.discard(u)
    return seen


@dataclass(frozen=True)
class TcSummary:
    per_node_reach: tuple[int, ...]
    total: int


def _reach_counts(args) -> list[int]:
    dag, nodes = args
    return [len(descendants(dag, u)) for u in nodes]


def worker_count() -> int:
    raw = os.environ.get("REACH_RATIO_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"REACH_RATIO_THREADS must be an integer, got {raw!r}") from None


def tc_size(dag: Dag, workers: int | None = None) -> TcSummary:
    """|TC(u)| for every node by one BFS per node, and their sum."""
    workers = worker_count() if workers is None else workers
    n = dag.node_count
    if workers <= 1 or n < 2048:
        per = [len(descendants(dag, u)) for u in range(n)]
    else:
        step = -(-n // workers)
        chunks = [(dag, range(i, min(n, i + step))) for i in range(0, n, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per = [c for part in pool.map(_reach_counts, chunks) for c in part]
    return TcSummary(tuple(per), sum(per))


def tc_size_bitset(dag: Dag) -> TcSummary:
    """Same result as :func:`tc_size` via reachability bitsets in reverse topological order.

    Memory grows with the closure, so this is for sparse-closure graphs that
    are too large for per-node BFS.
    """
    n = dag.node_count
    bits = [0] * n
    for u in reversed(dag.topo_order):
        acc = 0
        for w in dag.fwd_adj[u]:
            acc |= bits[w] | (1 << w)
        bits[u] = acc
    per = tuple(b.bit_count() for b in bits)
    return TcSummary(per, sum(per))


def closure_matrix(dag: Dag) -> list[list[bool]]:
    """Reflexive reachability matrix by repeated boolean squaring."""
    n = dag.node_count
    m = [[i == j for j in range(n)] for i in range(n)]
    for u, v in dag.edges():
        m[u][v] = True
    size = 1
    while size < n:
        m = [[any(row[k] and m[k][j] for k in range(n)) for j in range(n)] for row in m]
        size *= 2
    return m


def coverage_count(dag: Dag, labels: HopLabels) -> int:
    """Ordered pairs (a, d), a != d, whose labels intersect; exhaustive over V x V."""
    n = dag.node_count
    if labels.node_count != n:
        raise UsageError("labels and dag disagree on node count")
    count = 0
    for a in range(n):
        for d in range(n):
            if a != d and labels.covered_lists(a, d):
                count += 1
    return count


def verify_partition(
    labels: HopLabels,
    subset: Iterable[int],
    side: str,
    classes: Iterable[Iterable[int]],
) -> bool:
    """Check that ``classes`` is exactly the label-equivalence partition of ``subset``.

    ``side`` is ``"forward"`` (compare out-labels) or ``"backward"`` (in-labels).
    """
    if side == "forward":
        labs = labels.out_labels
    elif side == "backward":
        labs = labels.in_labels
    else:
        raise UsageError(f"side must be 'forward' or 'backward', got {side!r}")
    subset = set(subset)
    seen: set[int] = set()
    keys = set()
    for cls in classes:
        cls = list(cls)
        if not cls:
            return False
        if any(x in seen for x in cls) or len(set(cls)) != len(cls):
            return False
        seen.update(cls)
        key = tuple(labs[cls[0]])
        if any(tuple(labs[x]) != key for x in cls):
            return False
        if key in keys:
            return False
        keys.add(key)
    return seen == subset


def group_by_label(labels: HopLabels, subset: Sequence[int], side: str) -> list[list[int]]:
    labs = labels.out_labels if side == "forward" else labels.in_labels
    groups: dict[tuple[int, ...], list[int]] = {}
    for x in subset:
        groups.setdefault(tuple(labs[x]), []).append(x)
    return list(groups.values())
