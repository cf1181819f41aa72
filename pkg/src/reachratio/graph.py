"""Raw graph parsing, SCC condensation, degree ranking and graph statistics.

Raw graphs come in two text formats:

* ``edge-list``: one ``u v`` pair per line, ``#`` starts a comment line.
* ``gra``: the GRAIL convention, an optional ``graph_for_greach`` header, the
  vertex count, then one ``id: succ1 succ2 ... #`` line per vertex.

Everything downstream works on a :class:`Dag`, the condensation of the raw
graph, whose node ids are dense in ``[0, node_count)``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from .errors import CapacityError, ParseError, UsageError

MAX_NODE_ID = 2**31 - 2

FORMATS = ("edge-list", "gra")


@dataclass(frozen=True)
class DirectedGraph:
    """A normalized raw directed graph (no duplicate edges, no self-loops)."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    duplicates_dropped: int = 0
    self_loops_dropped: int = 0

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[tuple[int, int]]) -> "DirectedGraph":
        seen: set[tuple[int, int]] = set()
        dups = loops = 0
        for u, v in edges:
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise UsageError(f"edge ({u}, {v}) outside [0, {node_count})")
            if u == v:
                loops += 1
            elif (u, v) in seen:
                dups += 1
            else:
                seen.add((u, v))
        return cls(node_count, tuple(sorted(seen)), dups, loops)

    def successors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            adj[u].append(v)
        return adj


def _lines(stream: IO | Iterable) -> Iterable[str]:
    for raw in stream:
        yield raw.decode() if isinstance(raw, (bytes, bytearray)) else raw


def _node_id(token: str, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"not a node id: {token!r}", lineno) from None
    if value < 0:
        raise ParseError(f"negative node id {value}", lineno)
    if value > MAX_NODE_ID:
        raise CapacityError(f"line {lineno}: node id {value} exceeds {MAX_NODE_ID}")
    return value


def parse_edge_list(stream: IO | Iterable, format: str = "edge-list") -> DirectedGraph:
    """Parse ``stream`` (text or bytes lines) into a normalized graph.

    Duplicate edges and self-loops are dropped; the counts are kept on the
    returned graph so callers can report them.
    """
    if format == "edge-list":
        return _parse_pairs(_lines(stream))
    if format == "gra":
        return _parse_gra(_lines(stream))
    raise UsageError(f"unknown graph format {format!r}; expected one of {FORMATS}")


def _parse_pairs(lines: Iterable[str]) -> DirectedGraph:
    edges = []
    top = -1
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'u v', got {text!r}", lineno)
        u, v = _node_id(parts[0], lineno), _node_id(parts[1], lineno)
        top = max(top, u, v)
        edges.append((u, v))
    return DirectedGraph.from_edges(top + 1, edges)


def _parse_gra(lines: Iterable[str]) -> DirectedGraph:
    it = ((n, line.strip()) for n, line in enumerate(lines, 1))
    it = ((n, t) for n, t in it if t)
    try:
        lineno, head = next(it)
    except StopIteration:
        raise ParseError("empty gra file") from None
    if head == "graph_for_greach":
        try:
            lineno, head = next(it)
        except StopIteration:
            raise ParseError("missing vertex count", lineno) from None
    count = _node_id(head, lineno)
    edges = []
    for lineno, text in it:
        src, sep, rest = text.partition(":")
        if not sep:
            raise ParseError(f"expected 'id: succ ... #', got {text!r}", lineno)
        u = _node_id(src.strip(), lineno)
        tokens = rest.split()
        if not tokens or tokens[-1] != "#":
            raise ParseError("successor list must end with '#'", lineno)
        for tok in tokens[:-1]:
            v = _node_id(tok, lineno)
            if u >= count or v >= count:
                raise ParseError(f"node id out of range [0, {count})", lineno)
            edges.append((u, v))
    return DirectedGraph.from_edges(count, edges)


@dataclass(frozen=True)
class Dag:
    """Condensed graph with sorted forward/reverse adjacency and a topological order.

    ``scc_map[x]`` is the dag node that raw node ``x`` was merged into. For a
    Dag built directly from acyclic edges it is the identity.
    """

    node_count: int
    fwd_adj: tuple[tuple[int, ...], ...]
    rev_adj: tuple[tuple[int, ...], ...]
    topo_order: tuple[int, ...]
    scc_map: tuple[int, ...]
    topo_position: tuple[int, ...] = field(repr=False, compare=False)

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.fwd_adj)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, succ in enumerate(self.fwd_adj) for v in succ]

    def out_degree(self, v: int) -> int:
        return len(self.fwd_adj[v])

    def in_degree(self, v: int) -> int:
        return len(self.rev_adj[v])

    def check_node(self, v: int) -> None:
        if not 0 <= v < self.node_count:
            raise UsageError(f"node id {v} outside [0, {self.node_count})")

    @classmethod
    def from_edges(
        cls,
        node_count: int,
        edges: Iterable[tuple[int, int]],
        scc_map: Sequence[int] | None = None,
    ) -> "Dag":
        """Build a Dag from acyclic ``edges``; raises UsageError on a cycle."""
        fwd: list[set[int]] = [set() for _ in range(node_count)]
        for u, v in edges:
            if u == v:
                raise UsageError(f"self-loop on node {u}")
            fwd[u].add(v)
        rev: list[list[int]] = [[] for _ in range(node_count)]
        for u in range(node_count):
            for v in fwd[u]:
                rev[v].append(u)
        fwd_adj = tuple(tuple(sorted(s)) for s in fwd)
        rev_adj = tuple(tuple(sorted(p)) for p in rev)
        order = _kahn(fwd_adj, rev_adj, smallest_first=True)
        if len(order) != node_count:
            raise UsageError("edges contain a cycle; condense the graph first")
        position = [0] * node_count
        for i, v in enumerate(order):
            position[v] = i
        if scc_map is None:
            scc_map = range(node_count)
        return cls(node_count, fwd_adj, rev_adj, tuple(order), tuple(scc_map), tuple(position))


def _kahn(fwd, rev, smallest_first: bool) -> list[int]:
    sign = 1 if smallest_first else -1
    indeg = [len(p) for p in rev]
    heap = [sign * v for v, d in enumerate(indeg) if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = sign * heapq.heappop(heap)
        order.append(u)
        for w in fwd[u]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, sign * w)
    return order


def alternate_topo_order(dag: Dag) -> list[int]:
    """Topological order that prefers the largest ready node id."""
    return _kahn(dag.fwd_adj, dag.rev_adj, smallest_first=False)


def strongly_connected_components(succ: Sequence[Sequence[int]]) -> list[list[int]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            nbrs = succ[v]
            if i < len(nbrs):
                work[-1] = (v, i + 1)
                w = nbrs[i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                if low[v] < low[parent]:
                    low[parent] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def condense(g: DirectedGraph) -> Dag:
    """Collapse each strongly connected component of ``g`` into one dag node.

    Components are numbered by their smallest raw member, so condensing a
    graph that is already acyclic returns the same node ids.
    """
    comps = strongly_connected_components(g.successors())
    comps.sort(key=min)
    scc_map = [0] * g.node_count
    for cid, comp in enumerate(comps):
        for x in comp:
            scc_map[x] = cid
    edges = {(scc_map[u], scc_map[v]) for u, v in g.edges if scc_map[u] != scc_map[v]}
    return Dag.from_edges(len(comps), edges, scc_map)


@dataclass(frozen=True)
class RankedOrder:
    order: tuple[int, ...]
    score: tuple[int, ...]

    def top(self, k: int) -> tuple[int, ...]:
        return self.order[: max(0, k)]


def rank_nodes(dag: Dag) -> RankedOrder:
    """Rank by (|out|+1)*(|in|+1), descending; ties go to the smaller id."""
    score = tuple((len(f) + 1) * (len(r) + 1) for f, r in zip(dag.fwd_adj, dag.rev_adj))
    order = sorted(range(dag.node_count), key=lambda v: (-score[v], v))
    return RankedOrder(tuple(order), score)


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    avg_degree: float
    topo_levels: int
    avg_reach: float | None = None

    def as_dict(self) -> dict:
        return {
            "nodes": self.node_count,
            "edges": self.edge_count,
            "avg_degree": self.avg_degree,
            "topo_levels": self.topo_levels,
            "avg_reach": self.avg_reach,
        }


def longest_path_levels(dag: Dag) -> int:
    """Number of nodes on the longest path."""
    depth = [1] * dag.node_count
    for u in dag.topo_order:
        du = depth[u] + 1
        for w in dag.fwd_adj[u]:
            if depth[w] < du:
                depth[w] = du
    return max(depth, default=0)


def compute_stats(dag: Dag, with_reach: bool = False) -> GraphStats:
    n = dag.node_count
    if n == 0:
        return GraphStats(0, 0, 0.0, 0, 0.0 if with_reach else None)
    m = dag.edge_count
    avg_reach = None
    if with_reach:
        from .oracle import tc_size

        avg_reach = tc_size(dag).total / n
    return GraphStats(n, m, 2 * m / n, longest_path_levels(dag), avg_reach)


def write_gra(dag: Dag, out: IO[str]) -> None:
    out.write("graph_for_greach\n")
    out.write(f"{dag.node_count}\n")
    for u, succ in enumerate(dag.fwd_adj):
        tail = " ".join(map(str, succ))
        out.write(f"{u}: {tail} #\n" if tail else f"{u}: #\n")


def write_edge_list(dag: Dag, out: IO[str]) -> None:
    for u, v in dag.edges():
        out.write(f"{u} {v}\n")
