"""Equal-workload generation and label-accelerated reachability queries.

A query ``u -> v`` is tried against, in order:

1. the partial 2-hop labels (positive cut, no traversal);
2. two topological orders (negative cut: if ``u`` comes after ``v`` in any
   topological order, ``u`` cannot reach ``v``);
3. a BFS from ``u`` that stops as soon as a visited node's labels cover
   ``v`` and skips nodes the topological orders rule out.

Labels also answer negatively when ``u`` or ``v`` is a hop-node: pruned
labeling covers every reachable pair whose paths pass a hop-node, and both
endpoints lie on every such path.
"""

from __future__ import annotations

import csv
import hashlib
import io
import random
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import IO, Iterable

from .errors import CorrectnessError, ParseError, UsageError, WorkloadError
from .graph import Dag, alternate_topo_order
from .labels import HopLabels
from .oracle import reach

LABELS = "labels"
NEGATIVE_CUT = "negative_cut"
TRAVERSAL = "traversal"


def graph_hash(dag: Dag) -> str:
    h = hashlib.sha256(str(dag.node_count).encode())
    for u, succ in enumerate(dag.fwd_adj):
        h.update(f"|{u}:{','.join(map(str, succ))}".encode())
    return h.hexdigest()[:16]


@dataclass
class Workload:
    queries: list[tuple[int, int, bool]]
    seed: int | None = None
    graph: str = ""

    @property
    def counts(self) -> tuple[int, int]:
        pos = sum(1 for q in self.queries if q[2])
        return pos, len(self.queries) - pos

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# graph={self.graph} seed={self.seed}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["u", "v", "expected"])
        for u, v, e in self.queries:
            writer.writerow([u, v, int(e)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, stream: IO[str] | Iterable[str]) -> "Workload":
        lines = list(stream)
        seed, graph = None, ""
        body = []
        for lineno, line in enumerate(lines, 1):
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "seed" and val not in ("", "None"):
                        seed = int(val)
                    elif key == "graph":
                        graph = val
            elif line.strip():
                body.append((lineno, line))
        if not body or [c.strip() for c in body[0][1].split(",")] != ["u", "v", "expected"]:
            raise ParseError("workload must start with a 'u,v,expected' header")
        queries = []
        for lineno, line in body[1:]:
            parts = [c.strip() for c in line.split(",")]
            if len(parts) != 3 or parts[2] not in ("0", "1"):
                raise ParseError(f"expected 'u,v,0|1', got {line.strip()!r}", lineno)
            try:
                queries.append((int(parts[0]), int(parts[1]), parts[2] == "1"))
            except ValueError:
                raise ParseError(f"bad node id in {line.strip()!r}", lineno) from None
        return cls(queries, seed, graph)


def _validated(dag: Dag, u: int, v: int) -> bool:
    pos = dag.topo_position
    if u != v and pos[u] > pos[v]:
        return False
    return reach(dag, u, v)


def gen_workload(dag: Dag, n: int, seed: int | None = 0) -> Workload:
    """``n/2`` reachable and ``n/2`` unreachable queries, each checked against BFS.

    Unreachable queries are uniformly sampled pairs that fail the check.
    Reachable ones come from a random walk from a uniform start node down to
    a sink, taking a uniform node of the walk other than the start.
    """
    if n < 0 or n % 2:
        raise UsageError(f"workload size must be even and non-negative, got {n}")
    rng = random.Random(seed)
    half = n // 2
    nodes = dag.node_count
    if half and dag.edge_count == 0:
        raise WorkloadError("graph has no reachable pairs; cannot build reachable queries")
    if half and nodes < 2:
        raise WorkloadError("graph has no unreachable pairs; cannot build unreachable queries")
    fwd = dag.fwd_adj
    queries = []
    while len(queries) < half:
        u = rng.randrange(nodes)
        path = [u]
        w = u
        while fwd[w]:
            w = fwd[w][rng.randrange(len(fwd[w]))]
            path.append(w)
        if len(path) == 1:
            continue
        v = path[rng.randrange(1, len(path))]
        if not _validated(dag, u, v):
            raise CorrectnessError(f"walk produced unreachable pair ({u}, {v})")
        queries.append((u, v, True))
    negatives = 0
    while negatives < half:
        u, v = rng.randrange(nodes), rng.randrange(nodes)
        if not _validated(dag, u, v):
            queries.append((u, v, False))
            negatives += 1
    rng.shuffle(queries)
    return Workload(queries, seed, graph_hash(dag))


class QueryEngine:
    """Answers reachability queries over an immutable Dag and label set."""

    def __init__(self, dag: Dag, labels: HopLabels) -> None:
        if labels.node_count != dag.node_count:
            raise UsageError("labels and dag disagree on node count")
        self.dag = dag
        self.labels = labels
        self.pos1 = dag.topo_position
        pos2 = [0] * dag.node_count
        for i, v in enumerate(alternate_topo_order(dag)):
            pos2[v] = i
        self.pos2 = pos2

    def query(self, u: int, v: int) -> tuple[bool, str, int]:
        """(answer, channel, expanded node count)."""
        labels = self.labels
        if labels.covered(u, v):
            return True, LABELS, 0
        if u == v:
            return True, TRAVERSAL, 0
        if labels.rank(u) or labels.rank(v):
            return False, LABELS, 0
        p1, p2 = self.pos1, self.pos2
        t1, t2 = p1[v], p2[v]
        if p1[u] > t1 or p2[u] > t2:
            return False, NEGATIVE_CUT, 0
        fwd = self.dag.fwd_adj
        seen = {u}
        queue = deque([u])
        expanded = 0
        while queue:
            w = queue.popleft()
            expanded += 1
            for x in fwd[w]:
                if x in seen:
                    continue
                seen.add(x)
                if x == v or labels.covered(x, v):
                    return True, TRAVERSAL, expanded
                if p1[x] > t1 or p2[x] > t2 or labels.rank(x):
                    continue
                queue.append(x)
        return False, TRAVERSAL, expanded


def answer(dag: Dag, labels: HopLabels, topo_pair, u: int, v: int) -> bool:
    """One-off query. ``topo_pair`` may be a prepared :class:`QueryEngine` or None."""
    engine = topo_pair if isinstance(topo_pair, QueryEngine) else QueryEngine(dag, labels)
    return engine.query(u, v)[0]


@dataclass
class QueryStats:
    total: int = 0
    answered_by_labels: int = 0
    answered_by_negative_cut: int = 0
    answered_by_traversal: int = 0
    expanded_nodes_total: int = 0
    wall_ms: float = 0.0
    k: int = 0
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def run_bench(dag: Dag, labels: HopLabels, w: Workload, engine: QueryEngine | None = None) -> QueryStats:
    """Answer every workload query; any disagreement with ``expected`` raises."""
    engine = engine or QueryEngine(dag, labels)
    n = dag.node_count
    for u, v, _ in w.queries:
        if not (0 <= u < n and 0 <= v < n):
            raise UsageError(f"query ({u}, {v}) outside [0, {n})")
    stats = QueryStats(k=labels.k)
    tally = {LABELS: 0, NEGATIVE_CUT: 0, TRAVERSAL: 0}
    expanded = 0
    t0 = time.perf_counter()
    for u, v, expected in w.queries:
        got, channel, cost = engine.query(u, v)
        if got != expected:
            raise CorrectnessError(f"query ({u}, {v}) answered {got}, expected {expected}")
        tally[channel] += 1
        expanded += cost
    stats.wall_ms = (time.perf_counter() - t0) * 1e3
    stats.total = len(w.queries)
    stats.answered_by_labels = tally[LABELS]
    stats.answered_by_negative_cut = tally[NEGATIVE_CUT]
    stats.answered_by_traversal = tally[TRAVERSAL]
    stats.expanded_nodes_total = expanded
    return stats
