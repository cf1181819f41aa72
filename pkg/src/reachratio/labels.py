"""Partial 2-hop labels and their pruned construction.

Labels store hop *ranks* (1 for the first processed hop-node, 2 for the
second, ...) rather than node ids, so appending a new hop-node keeps every
label sorted for free. While ``k`` stays within :data:`BITSET_LIMIT` a bitset
mirror (one Python int per node and side) turns the label test into a single
AND.
"""

from __future__ import annotations

import struct
import sys
from array import array
from collections import deque
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import ParseError, UsageError

BITSET_LIMIT = 128

_MAGIC = b"HOPL"
_VERSION = 1


def _intersects(a: Sequence[int], b: Sequence[int]) -> bool:
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        x, y = a[i], b[j]
        if x == y:
            return True
        if x < y:
            i += 1
        else:
            j += 1
    return False


def _bits(ranks: Iterable[int]) -> int:
    m = 0
    for r in ranks:
        m |= 1 << (r - 1)
    return m


class HopLabels:
    """Out/in rank lists for every node over the first ``k`` hop-nodes."""

    def __init__(self, node_count: int, bitset: bool | None = None) -> None:
        self.node_count = node_count
        self.hop_nodes: list[int] = []
        self.out_labels: list[list[int]] = [[] for _ in range(node_count)]
        self.in_labels: list[list[int]] = [[] for _ in range(node_count)]
        self._rank = [0] * node_count
        # bitset=None: keep the mirror while k <= BITSET_LIMIT
        self._bitset_auto = bitset is None
        if bitset:
            self.out_bits: list[int] | None = [0] * node_count
            self.in_bits: list[int] | None = [0] * node_count
        elif bitset is None:
            self.out_bits = [0] * node_count
            self.in_bits = [0] * node_count
        else:
            self.out_bits = self.in_bits = None

    @classmethod
    def from_lists(
        cls,
        hop_nodes: Sequence[int],
        out_labels: Sequence[Sequence[int]],
        in_labels: Sequence[Sequence[int]],
        bitset: bool | None = None,
    ) -> "HopLabels":
        """Build labels from explicit per-node rank lists."""
        n = len(out_labels)
        if len(in_labels) != n:
            raise UsageError("out_labels and in_labels differ in length")
        labels = cls(n, bitset)
        k = len(hop_nodes)
        labels.hop_nodes = list(hop_nodes)
        for r, v in enumerate(hop_nodes, 1):
            labels._rank[v] = r
        for v in range(n):
            for side in (out_labels[v], in_labels[v]):
                if any(not 1 <= r <= k for r in side) or any(
                    a >= b for a, b in zip(side, side[1:])
                ):
                    raise UsageError(f"label of node {v} is not an increasing rank list in [1, {k}]")
            labels.out_labels[v] = list(out_labels[v])
            labels.in_labels[v] = list(in_labels[v])
        labels._sync_bits()
        return labels

    @property
    def k(self) -> int:
        return len(self.hop_nodes)

    @property
    def has_bits(self) -> bool:
        return self.out_bits is not None

    def rank(self, v: int) -> int:
        """Hop rank of ``v``, or 0 if ``v`` is not a hop-node."""
        return self._rank[v]

    def is_complete(self) -> bool:
        return self.k == self.node_count

    def covered(self, u: int, v: int) -> bool:
        """True iff out_label(u) and in_label(v) share a hop rank."""
        if self.out_bits is not None:
            return (self.out_bits[u] & self.in_bits[v]) != 0
        return _intersects(self.out_labels[u], self.in_labels[v])

    def covered_lists(self, u: int, v: int) -> bool:
        return _intersects(self.out_labels[u], self.in_labels[v])

    def append_hop(self, v: int, ancestors: Iterable[int], descendants: Iterable[int]) -> int:
        """Register ``v`` as the next hop-node; returns its rank."""
        if self._rank[v]:
            raise UsageError(f"node {v} is already hop-node {self._rank[v]}")
        r = self.k + 1
        self.hop_nodes.append(v)
        self._rank[v] = r
        out_l, in_l = self.out_labels, self.in_labels
        if self.out_bits is not None and self._bitset_auto and r > BITSET_LIMIT:
            self.out_bits = self.in_bits = None
        if self.out_bits is None:
            for a in ancestors:
                out_l[a].append(r)
            for d in descendants:
                in_l[d].append(r)
        else:
            bit = 1 << (r - 1)
            ob, ib = self.out_bits, self.in_bits
            for a in ancestors:
                out_l[a].append(r)
                ob[a] |= bit
            for d in descendants:
                in_l[d].append(r)
                ib[d] |= bit
        return r

    def _sync_bits(self) -> None:
        if self.out_bits is None:
            return
        if self._bitset_auto and self.k > BITSET_LIMIT:
            self.out_bits = self.in_bits = None
            return
        self.out_bits = [_bits(lab) for lab in self.out_labels]
        self.in_bits = [_bits(lab) for lab in self.in_labels]

    def copy(self) -> "HopLabels":
        other = HopLabels.__new__(HopLabels)
        other.node_count = self.node_count
        other.hop_nodes = list(self.hop_nodes)
        other.out_labels = [list(x) for x in self.out_labels]
        other.in_labels = [list(x) for x in self.in_labels]
        other._rank = list(self._rank)
        other._bitset_auto = self._bitset_auto
        other.out_bits = None if self.out_bits is None else list(self.out_bits)
        other.in_bits = None if self.in_bits is None else list(self.in_bits)
        return other

    def truncated(self, k: int) -> "HopLabels":
        """The labels as they were after the first ``k`` hop-nodes."""
        k = max(0, min(k, self.k))
        return HopLabels.from_lists(
            self.hop_nodes[:k],
            [[r for r in lab if r <= k] for lab in self.out_labels],
            [[r for r in lab if r <= k] for lab in self.in_labels],
            bitset=None if self._bitset_auto else self.has_bits,
        )

    def mask_array(self, side: str) -> np.ndarray:
        """Labels as an ``(node_count, words)`` uint64 array of rank bits."""
        labs = self.out_labels if side == "out" else self.in_labels
        words = max(1, (self.k + 63) // 64)
        out = np.zeros((self.node_count, words), dtype=np.uint64)
        for v, lab in enumerate(labs):
            for r in lab:
                w, b = divmod(r - 1, 64)
                out[v, w] |= np.uint64(1 << b)
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HopLabels):
            return NotImplemented
        return (
            self.hop_nodes == other.hop_nodes
            and self.out_labels == other.out_labels
            and self.in_labels == other.in_labels
        )

    def __repr__(self) -> str:
        return f"HopLabels(node_count={self.node_count}, k={self.k})"

    # ---- snapshot file ---------------------------------------------------

    def dump(self, fp: BinaryIO) -> None:
        """Write a little-endian uint32 snapshot."""
        words = array("I", [_VERSION, self.node_count, self.k])
        words.extend(self.hop_nodes)
        for v in range(self.node_count):
            words.append(len(self.out_labels[v]))
            words.extend(self.out_labels[v])
            words.append(len(self.in_labels[v]))
            words.extend(self.in_labels[v])
        if sys.byteorder != "little":
            words.byteswap()
        fp.write(_MAGIC)
        fp.write(words.tobytes())

    @classmethod
    def load(cls, fp: BinaryIO, bitset: bool | None = None) -> "HopLabels":
        if fp.read(4) != _MAGIC:
            raise ParseError("not a label snapshot (bad magic)")
        data = fp.read()
        if len(data) % 4:
            raise ParseError("truncated label snapshot")
        words = array("I")
        words.frombytes(data)
        if sys.byteorder != "little":
            words.byteswap()
        try:
            version, n, k = words[0], words[1], words[2]
            if version != _VERSION:
                raise ParseError(f"unsupported snapshot version {version}")
            pos = 3
            hops = list(words[pos : pos + k])
            pos += k
            outs, ins = [], []
            for _ in range(n):
                c = words[pos]
                outs.append(list(words[pos + 1 : pos + 1 + c]))
                pos += 1 + c
                c = words[pos]
                ins.append(list(words[pos + 1 : pos + 1 + c]))
                pos += 1 + c
        except IndexError:
            raise ParseError("truncated label snapshot") from None
        if pos != len(words) or len(hops) != k or any(h >= n for h in hops):
            raise ParseError("malformed label snapshot")
        return cls.from_lists(hops, outs, ins, bitset)


def snapshot_header(fp: BinaryIO) -> tuple[int, int]:
    """(node_count, k) of a snapshot without reading the labels."""
    head = fp.read(16)
    if head[:4] != _MAGIC or len(head) < 16:
        raise ParseError("not a label snapshot")
    _, n, k = struct.unpack("<III", head[4:16])
    return n, k


@dataclass
class HopStep:
    """Pruned ancestor/descendant sets of the ``rank``-th hop-node ``hop``."""

    rank: int
    hop: int
    ancestors: list[int]
    descendants: list[int]


class LabelBuilder:
    """Runs the pruned BFS from each hop-node and grows the labels.

    :meth:`expand` only reads the current labels, :meth:`commit` appends the
    new rank. Callers that count against ``L^{i-1}`` do their counting in
    between.
    """

    def __init__(self, dag, labels: HopLabels | None = None, bitset: bool | None = None) -> None:
        self.dag = dag
        self.labels = labels if labels is not None else HopLabels(dag.node_count, bitset)
        if self.labels.node_count != dag.node_count:
            raise UsageError("labels and dag disagree on node count")
        self._stamp = [0] * dag.node_count
        self._epoch = 0

    def _bfs(self, v: int, adj, prune) -> list[int]:
        self._epoch += 1
        epoch, stamp = self._epoch, self._stamp
        stamp[v] = epoch
        admitted = []
        queue = deque([v])
        while queue:
            w = queue.popleft()
            if prune(w):
                continue
            admitted.append(w)
            for x in adj[w]:
                if stamp[x] != epoch:
                    stamp[x] = epoch
                    queue.append(x)
        return admitted

    def expand(self, v: int) -> HopStep:
        labels = self.labels
        if labels.rank(v):
            raise UsageError(f"node {v} was already processed as hop-node {labels.rank(v)}")
        if labels.out_bits is not None:
            ob, ib = labels.out_bits, labels.in_bits
            mine_out, mine_in = ob[v], ib[v]
            fwd_prune = (lambda w: (mine_out & ib[w]) != 0) if mine_out else _never
            bwd_prune = (lambda w: (ob[w] & mine_in) != 0) if mine_in else _never
        else:
            fwd_prune = lambda w: labels.covered(v, w)  # noqa: E731
            bwd_prune = lambda w: labels.covered(w, v)  # noqa: E731
        descendants = self._bfs(v, self.dag.fwd_adj, fwd_prune)
        ancestors = self._bfs(v, self.dag.rev_adj, bwd_prune)
        return HopStep(labels.k + 1, v, ancestors, descendants)

    def commit(self, step: HopStep) -> None:
        if step.rank != self.labels.k + 1:
            raise UsageError(f"step for rank {step.rank} applied at k={self.labels.k}")
        self.labels.append_hop(step.hop, step.ancestors, step.descendants)

    def process(self, v: int) -> HopStep:
        step = self.expand(v)
        self.commit(step)
        return step


def _never(_w: int) -> bool:
    return False


def process_hop_node(dag, labels: HopLabels, v: int) -> HopStep:
    """Process ``v`` as the next hop-node, updating ``labels`` in place."""
    return LabelBuilder(dag, labels).process(v)


def build_labels(dag, hop_nodes: Iterable[int], bitset: bool | None = None) -> HopLabels:
    builder = LabelBuilder(dag, bitset=bitset)
    for v in hop_nodes:
        builder.process(v)
    return builder.labels


def index_size(labels: HopLabels) -> int:
    return sum(map(len, labels.out_labels)) + sum(map(len, labels.in_labels))


def isr(labels_k: HopLabels, labels_full: HopLabels) -> float:
    """Index size ratio of a partial index against the full one."""
    full = index_size(labels_full)
    if full == 0:
        return 1.0
    return index_size(labels_k) / full
