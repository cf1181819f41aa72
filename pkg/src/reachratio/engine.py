"""Reachability-ratio computation: baseline, incremental and incremental-partition.

All three algorithms share Step-1 (pruned BFS from each hop-node, see
:mod:`reachratio.labels`) and differ only in how they count the reachable
pairs the labels cover (Step-2):

* ``blrr`` builds ``L^k`` and tests every pair in ``A x D``, where ``A`` and
  ``D`` are the unions of all ancestor/descendant sets.
* ``incrr`` counts the pairs each hop-node adds: ``|A_i|*|D_i| - 1 - lambda``,
  where ``lambda`` counts pairs of ``A_i x D_i`` already covered by ``L^{i-1}``.
* ``incrr_plus`` computes the same ``lambda`` from one test per pair of label
  equivalence classes, tracking the classes with per-node set ids.

The counting functions take labels and node sets only, so they can be driven
from published label tables as well as from a graph.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConsistencyError, UsageError
from .graph import Dag, rank_nodes
from .labels import HopLabels, HopStep, LabelBuilder, _bits, index_size

ALGORITHMS = ("blrr", "incrr", "incrrplus")

# below this many candidate pairs the pure-Python loop beats numpy setup
_VECTOR_THRESHOLD = 4096
_CHUNK_CELLS = 1 << 22


# ---- counting core -------------------------------------------------------


def step_increment(a_size: int, d_size: int, lam: int) -> int:
    """Newly covered pairs of a hop-node: ``|A_i|*|D_i| - 1 - lambda``."""
    if a_size < 1 or d_size < 1:
        raise ConsistencyError(f"hop-node sets must contain the hop-node (|A|={a_size}, |D|={d_size})")
    if not 0 <= lam <= a_size * d_size - 1:
        raise ConsistencyError(f"lambda={lam} exceeds |A|*|D|-1={a_size * d_size - 1}")
    return a_size * d_size - 1 - lam


def _masks(labels: HopLabels, nodes: Sequence[int], side: str) -> np.ndarray:
    bits = labels.out_bits if side == "out" else labels.in_bits
    if bits is None:
        labs = labels.out_labels if side == "out" else labels.in_labels
        values = [_bits(labs[v]) for v in nodes]
    else:
        values = [bits[v] for v in nodes]
    words = max(1, (labels.k + 63) // 64)
    out = np.empty((len(nodes), words), dtype=np.uint64)
    low = (1 << 64) - 1
    for w in range(words):
        shift = 64 * w
        out[:, w] = np.fromiter(((x >> shift) & low for x in values), dtype=np.uint64, count=len(values))
    return out


def _count_intersecting(amask: np.ndarray, dmask: np.ndarray) -> int:
    """Number of (row a, row d) pairs with a nonzero AND in some word."""
    na, nd = len(amask), len(dmask)
    if na == 0 or nd == 0:
        return 0
    rows = max(1, _CHUNK_CELLS // nd)
    total = 0
    for start in range(0, na, rows):
        block = amask[start : start + rows]
        hit = (block[:, 0:1] & dmask[:, 0][None, :]) != 0
        for w in range(1, amask.shape[1]):
            hit |= (block[:, w : w + 1] & dmask[:, w][None, :]) != 0
        total += int(np.count_nonzero(hit))
    return total


def count_covered_pairs(labels: HopLabels, ancestors: Sequence[int], descendants: Sequence[int]) -> int:
    """Pairs ``(a, d)`` of ``ancestors x descendants`` with ``a != d`` covered by ``labels``."""
    na, nd = len(ancestors), len(descendants)
    if na == 0 or nd == 0 or labels.k == 0:
        return 0
    if na * nd <= _VECTOR_THRESHOLD:
        if labels.out_bits is not None:
            ob, ib = labels.out_bits, labels.in_bits
            dbits = [(d, ib[d]) for d in descendants]
            count = 0
            for a in ancestors:
                x = ob[a]
                if x:
                    count += sum(1 for d, y in dbits if x & y and a != d)
            return count
        return sum(
            1 for a in ancestors for d in descendants if a != d and labels.covered_lists(a, d)
        )
    count = _count_intersecting(_masks(labels, ancestors, "out"), _masks(labels, descendants, "in"))
    dset = set(descendants)
    count -= sum(1 for x in ancestors if x in dset and labels.covered(x, x))
    return count


def lambda_pairwise(labels_prev: HopLabels, ancestors: Sequence[int], descendants: Sequence[int]) -> tuple[int, int]:
    """(lambda, tested): pairs of ``A_i x D_i`` already covered by ``L^{i-1}``.

    ``tested`` counts every pair in ``A_i x D_i``, self-pair included.
    """
    return count_covered_pairs(labels_prev, ancestors, descendants), len(ancestors) * len(descendants)


@dataclass
class ClassEntry:
    """One equivalence class of ``A_i`` (or ``D_i``): fresh set id, representative, size."""

    new_id: int
    representative: int
    size: int


ClassMap = dict  # old set id -> ClassEntry


@dataclass
class PartitionState:
    """Per-node set ids of the global forward/backward equivalence partitions."""

    id_anc: list[int]
    id_desc: list[int]
    next_anc_id: int = 0
    next_desc_id: int = 0

    @classmethod
    def fresh(cls, node_count: int) -> "PartitionState":
        return cls([0] * node_count, [0] * node_count)


def _refine(ids: list[int], members: Iterable[int], last_id: int) -> tuple[dict, int]:
    cmap: dict[int, ClassEntry] = {}
    for v in members:
        old = ids[v]
        entry = cmap.get(old)
        if entry is None:
            last_id += 1
            entry = cmap[old] = ClassEntry(last_id, v, 1)
        else:
            entry.size += 1
        ids[v] = entry.new_id
    return cmap, last_id


def partition_step(state: PartitionState, ancestors: Sequence[int], descendants: Sequence[int]) -> tuple[dict, dict]:
    """Split ``A_i`` and ``D_i`` into label-equivalence classes and refresh set ids.

    Nodes of ``A_i`` share an out-label after this step iff they shared a set
    id before it, so grouping by the old id is enough; each class then gets a
    fresh id.
    """
    h_anc, state.next_anc_id = _refine(state.id_anc, ancestors, state.next_anc_id)
    h_desc, state.next_desc_id = _refine(state.id_desc, descendants, state.next_desc_id)
    return h_anc, h_desc


def lambda_partitioned(labels_prev: HopLabels, h_anc: dict, h_desc: dict) -> tuple[int, int]:
    """(lambda, tested) with one label test per pair of class representatives."""
    lam = 0
    descs = [(e.representative, e.size) for e in h_desc.values()]
    for ea in h_anc.values():
        a, sa = ea.representative, ea.size
        for d, sd in descs:
            if labels_prev.covered(a, d):
                lam += sa * sd
    return lam, len(h_anc) * len(h_desc)


# ---- reports ---------------------------------------------------------------


@dataclass
class StepRecord:
    i: int
    hop: int
    a_size: int
    d_size: int
    n_i: int | None = None
    lam: int | None = None
    tested: int | None = None
    N: int | None = None
    alpha: float | None = None
    step1_ms: float = 0.0
    step2_ms: float = 0.0
    classes_anc: int | None = None
    classes_desc: int | None = None


CSV_FIELDS = ("algorithm", "i", "a_size", "d_size", "n_i", "lambda", "tested", "N_i", "alpha", "step1_ms", "step2_ms")


@dataclass
class RRReport:
    algorithm: str
    k: int
    tc_total: int
    N: int = 0
    alpha: float = 0.0
    tested: int = 0
    index_size: int = 0
    step1_ms: float = 0.0
    step2_ms: float = 0.0
    a_union: int | None = None
    d_union: int | None = None
    hop_nodes: list[int] = field(default_factory=list)
    steps: list[StepRecord] = field(default_factory=list)

    def at(self, k: int) -> tuple[int, float, int]:
        """(N_k, alpha_k, tested up to k) from the per-step records of an incremental run."""
        if self.algorithm == "blrr":
            if k != self.k:
                raise UsageError("a baseline report only knows its own k")
            return self.N, self.alpha, self.tested
        if k > len(self.steps):
            raise UsageError(f"report covers k <= {len(self.steps)}, asked for {k}")
        if k == 0:
            return 0, 0.0, 0
        rec = self.steps[k - 1]
        return rec.N, rec.alpha, sum(s.tested for s in self.steps[:k])

    def csv_rows(self) -> list[dict]:
        rows = []
        for s in self.steps:
            rows.append(
                {
                    "algorithm": self.algorithm,
                    "i": s.i,
                    "a_size": s.a_size,
                    "d_size": s.d_size,
                    "n_i": s.n_i,
                    "lambda": s.lam,
                    "tested": s.tested,
                    "N_i": s.N,
                    "alpha": None if s.alpha is None else f"{s.alpha:.6f}",
                    "step1_ms": f"{s.step1_ms:.3f}",
                    "step2_ms": f"{s.step2_ms:.3f}",
                }
            )
        return rows

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        if header:
            writer.writeheader()
        writer.writerows(self.csv_rows())
        return buf.getvalue()

    def summary(self) -> dict:
        data = asdict(self)
        data.pop("steps")
        return data

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _alpha(n: int, tc_total: int) -> float:
    if tc_total <= 0:
        return 0.0
    if n > tc_total:
        raise UsageError(f"covered pairs {n} exceed the supplied TC size {tc_total}")
    return n / tc_total


def _hop_nodes(dag: Dag, k: int, hop_nodes: Sequence[int] | None) -> list[int]:
    if k < 0:
        raise UsageError(f"k must be non-negative, got {k}")
    if hop_nodes is None:
        hop_nodes = rank_nodes(dag).order
    return list(hop_nodes[: min(k, dag.node_count)])


def _check_sets(step: HopStep) -> None:
    if step.hop not in step.ancestors or step.hop not in step.descendants:
        raise ConsistencyError(f"hop-node {step.hop} missing from its own sets")
    if len(set(step.ancestors).intersection(step.descendants)) != 1:
        raise ConsistencyError(f"A_{step.rank} and D_{step.rank} overlap beyond the hop-node; input has a cycle")


StepCallback = Callable[[StepRecord], "bool | None"]


@dataclass
class StepProbe:
    """State exposed to ``probe`` callbacks after each incremental step."""

    step: HopStep
    record: StepRecord
    labels: HopLabels
    h_anc: dict | None = None
    h_desc: dict | None = None
    state: PartitionState | None = None


# ---- the three algorithms ------------------------------------------------


def blrr(
    dag: Dag,
    k: int,
    tc_total: int,
    hop_nodes: Sequence[int] | None = None,
    bitset: bool | None = None,
) -> RRReport:
    """Baseline: build ``L^k``, then test every pair of ``A x D``."""
    hops = _hop_nodes(dag, k, hop_nodes)
    builder = LabelBuilder(dag, bitset=bitset)
    report = RRReport("blrr", len(hops), tc_total, hop_nodes=hops)
    n = dag.node_count
    in_a, in_d = bytearray(n), bytearray(n)
    a_union: list[int] = []
    d_union: list[int] = []
    for v in hops:
        t0 = time.perf_counter()
        step = builder.process(v)
        _check_sets(step)
        for a in step.ancestors:
            if not in_a[a]:
                in_a[a] = 1
                a_union.append(a)
        for d in step.descendants:
            if not in_d[d]:
                in_d[d] = 1
                d_union.append(d)
        ms = (time.perf_counter() - t0) * 1e3
        report.step1_ms += ms
        report.steps.append(StepRecord(step.rank, v, len(step.ancestors), len(step.descendants), step1_ms=ms))
    t0 = time.perf_counter()
    covered = count_covered_pairs(builder.labels, a_union, d_union)
    report.step2_ms = (time.perf_counter() - t0) * 1e3
    report.N = covered
    report.alpha = _alpha(covered, tc_total)
    report.tested = len(a_union) * len(d_union)
    report.a_union, report.d_union = len(a_union), len(d_union)
    report.index_size = index_size(builder.labels)
    if report.steps:
        last = report.steps[-1]
        last.N, last.alpha, last.tested, last.step2_ms = report.N, report.alpha, report.tested, report.step2_ms
    return report


def _incremental(
    algorithm: str,
    dag: Dag,
    k: int,
    tc_total: int,
    on_step: StepCallback | None,
    alpha_stop: float | None,
    hop_nodes: Sequence[int] | None,
    bitset: bool | None,
    probe: Callable[[StepProbe], None] | None,
) -> RRReport:
    hops = _hop_nodes(dag, k, hop_nodes)
    builder = LabelBuilder(dag, bitset=bitset)
    labels = builder.labels
    state = PartitionState.fresh(dag.node_count) if algorithm == "incrrplus" else None
    report = RRReport(algorithm, 0, tc_total)
    total = 0
    for v in hops:
        t0 = time.perf_counter()
        step = builder.expand(v)
        _check_sets(step)
        t1 = time.perf_counter()
        h_anc = h_desc = None
        if state is not None:
            h_anc, h_desc = partition_step(state, step.ancestors, step.descendants)
        if step.rank == 1:
            # empty L^0 covers nothing
            lam, tested = 0, 0
        elif state is not None:
            lam, tested = lambda_partitioned(labels, h_anc, h_desc)
        else:
            lam, tested = lambda_pairwise(labels, step.ancestors, step.descendants)
        n_i = step_increment(len(step.ancestors), len(step.descendants), lam)
        total += n_i
        alpha = _alpha(total, tc_total)
        t2 = time.perf_counter()
        builder.commit(step)
        t3 = time.perf_counter()
        rec = StepRecord(
            step.rank,
            v,
            len(step.ancestors),
            len(step.descendants),
            n_i,
            lam,
            tested,
            total,
            alpha,
            step1_ms=((t1 - t0) + (t3 - t2)) * 1e3,
            step2_ms=(t2 - t1) * 1e3,
            classes_anc=None if h_anc is None else len(h_anc),
            classes_desc=None if h_desc is None else len(h_desc),
        )
        report.steps.append(rec)
        report.hop_nodes.append(v)
        report.step1_ms += rec.step1_ms
        report.step2_ms += rec.step2_ms
        report.tested += tested
        if probe is not None:
            probe(StepProbe(step, rec, labels, h_anc, h_desc, state))
        stop = on_step(rec) if on_step is not None else None
        if stop or (alpha_stop is not None and alpha >= alpha_stop):
            break
    report.k = len(report.steps)
    report.N = total
    report.alpha = _alpha(total, tc_total)
    report.index_size = index_size(labels)
    return report


def incrr(
    dag: Dag,
    k: int,
    tc_total: int,
    on_step: StepCallback | None = None,
    alpha_stop: float | None = None,
    hop_nodes: Sequence[int] | None = None,
    bitset: bool | None = None,
    probe: Callable[[StepProbe], None] | None = None,
) -> RRReport:
    """Incremental: per hop-node, count new pairs against ``L^{i-1}`` pair by pair.

    ``on_step`` sees each step's record before the labels move to ``L^i``;
    returning True stops the run, as does reaching ``alpha_stop``.
    """
    return _incremental("incrr", dag, k, tc_total, on_step, alpha_stop, hop_nodes, bitset, probe)


def incrr_plus(
    dag: Dag,
    k: int,
    tc_total: int,
    on_step: StepCallback | None = None,
    alpha_stop: float | None = None,
    hop_nodes: Sequence[int] | None = None,
    bitset: bool | None = None,
    probe: Callable[[StepProbe], None] | None = None,
) -> RRReport:
    """Incremental-partition: like :func:`incrr` but one test per class pair."""
    return _incremental("incrrplus", dag, k, tc_total, on_step, alpha_stop, hop_nodes, bitset, probe)


def run(algorithm: str, dag: Dag, k: int, tc_total: int, **kwargs) -> RRReport:
    if algorithm == "blrr":
        kwargs.pop("on_step", None)
        kwargs.pop("alpha_stop", None)
        kwargs.pop("probe", None)
        return blrr(dag, k, tc_total, **kwargs)
    if algorithm == "incrr":
        return incrr(dag, k, tc_total, **kwargs)
    if algorithm == "incrrplus":
        return incrr_plus(dag, k, tc_total, **kwargs)
    raise UsageError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


# ---- replay from published data --------------------------------------------


def replay(
    algorithm: str,
    label_seq: Sequence[HopLabels],
    sets: Sequence[tuple[Sequence[int], Sequence[int]]],
    tc_total: int,
) -> RRReport:
    """Run the counting of ``algorithm`` from given labels and sets, no graph needed.

    ``label_seq[i]`` is ``L^i`` for ``i = 0..k`` and ``sets[i-1]`` is
    ``(A_i, D_i)``.
    """
    k = len(sets)
    if len(label_seq) != k + 1:
        raise UsageError("need labels L^0..L^k for k steps")
    if any(lab.k != i for i, lab in enumerate(label_seq)):
        raise UsageError("label_seq[i] must hold exactly i hop-nodes")
    report = RRReport(algorithm, k, tc_total, hop_nodes=list(label_seq[-1].hop_nodes))
    if algorithm == "blrr":
        a_union = list(dict.fromkeys(a for anc, _ in sets for a in anc))
        d_union = list(dict.fromkeys(d for _, desc in sets for d in desc))
        report.N = count_covered_pairs(label_seq[k], a_union, d_union)
        report.tested = len(a_union) * len(d_union)
        report.a_union, report.d_union = len(a_union), len(d_union)
        report.alpha = _alpha(report.N, tc_total)
        report.index_size = index_size(label_seq[k])
        return report
    if algorithm not in ("incrr", "incrrplus"):
        raise UsageError(f"unknown algorithm {algorithm!r}")
    state = PartitionState.fresh(label_seq[0].node_count) if algorithm == "incrrplus" else None
    total = 0
    for i, (anc, desc) in enumerate(sets, 1):
        prev = label_seq[i - 1]
        hop = label_seq[i].hop_nodes[i - 1]
        _check_sets(HopStep(i, hop, list(anc), list(desc)))
        rec = StepRecord(i, hop, len(anc), len(desc))
        if state is not None:
            h_anc, h_desc = partition_step(state, anc, desc)
            rec.classes_anc, rec.classes_desc = len(h_anc), len(h_desc)
        if i == 1:
            lam, tested = 0, 0
        elif state is not None:
            lam, tested = lambda_partitioned(prev, h_anc, h_desc)
        else:
            lam, tested = lambda_pairwise(prev, anc, desc)
        rec.lam, rec.tested = lam, tested
        rec.n_i = step_increment(len(anc), len(desc), lam)
        total += rec.n_i
        rec.N, rec.alpha = total, _alpha(total, tc_total)
        report.steps.append(rec)
        report.tested += tested
    report.N, report.alpha = total, _alpha(total, tc_total)
    report.index_size = index_size(label_seq[k])
    return report
