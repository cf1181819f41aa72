import csv
import io
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reachratio.errors import ConsistencyError, UsageError
from reachratio.graph import Dag, rank_nodes
from reachratio.labels import HopLabels, build_labels
from reachratio.engine import (
    CSV_FIELDS,
    PartitionState,
    blrr,
    count_covered_pairs,
    incrr,
    incrr_plus,
    lambda_partitioned,
    lambda_pairwise,
    partition_step,
    replay,
    run,
    step_increment,
)
from reachratio.oracle import coverage_count, tc_size, verify_partition

from conftest import SETS, SET_IDS, TC_EXAMPLE, dag_suite, random_dag, table_labels, v


@pytest.mark.parametrize("a,d,lam,expected", [(4, 7, 0, 27), (5, 5, 6, 18), (1, 1, 0, 0), (4, 4, 0, 15)])
def test_step_increment(a, d, lam, expected):
    assert step_increment(a, d, lam) == expected


@pytest.mark.parametrize("a,d,lam", [(0, 3, 0), (3, 0, 0), (2, 2, -1), (2, 2, 4)])
def test_step_increment_rejects(a, d, lam):
    with pytest.raises(ConsistencyError):
        step_increment(a, d, lam)


def test_lambda_pairwise_examples():
    assert lambda_pairwise(table_labels(1), *SETS[1]) == (0, 16)
    assert lambda_pairwise(table_labels(2), *SETS[2]) == (6, 25)


def test_count_covered_pairs_vector_path_matches_scalar():
    rng = random.Random(3)
    d = random_dag(rng, 120, 0.08)
    labels = build_labels(d, rank_nodes(d).order[:20])
    nodes = list(range(120))
    expected = sum(1 for a in nodes for b in nodes if a != b and labels.covered_lists(a, b))
    # 120 * 120 pairs crosses the vectorised threshold
    assert count_covered_pairs(labels, nodes, nodes) == expected
    assert count_covered_pairs(labels, nodes[:10], nodes[:10]) == sum(
        1 for a in nodes[:10] for b in nodes[:10] if a != b and labels.covered_lists(a, b)
    )


def sizes(cmap):
    return sorted(e.size for e in cmap.values())


def test_partition_step_reproduces_id_table():
    state = PartitionState.fresh(15)
    history = []
    for i, (anc, desc) in enumerate(SETS, 1):
        h_anc, h_desc = partition_step(state, anc, desc)
        history.append((h_anc, h_desc))
        assert (state.id_anc, state.id_desc) == SET_IDS[i]
    h1a, h1d = history[0]
    assert [(e.new_id, e.size) for e in h1a.values()] == [(1, 4)]
    assert [(e.new_id, e.size) for e in h1d.values()] == [(1, 7)]
    assert sizes(history[2][0]) == [2, 3]
    assert sizes(history[2][1]) == [2, 3]
    # fresh ids keep counting, never reset
    assert (state.next_anc_id, state.next_desc_id) == (4, 4)


def test_lambda_partitioned_examples():
    state = PartitionState.fresh(15)
    partition_step(state, *SETS[0])
    h2 = partition_step(state, *SETS[1])
    assert lambda_partitioned(table_labels(1), *h2) == (0, 1)
    h3 = partition_step(state, *SETS[2])
    assert lambda_partitioned(table_labels(2), *h3) == (6, 4)


def test_fixture_pipeline(example_dag):
    assert tc_size(example_dag).total == TC_EXAMPLE
    b2 = blrr(example_dag, 2, TC_EXAMPLE)
    assert (b2.N, b2.tested, b2.a_union, b2.d_union) == (42, 56, 8, 7)
    assert b2.alpha == pytest.approx(0.6, abs=1e-3)
    b3 = blrr(example_dag, 3, TC_EXAMPLE)
    assert (b3.N, b3.tested) == (60, 80)
    assert blrr(example_dag, 15, TC_EXAMPLE).N == TC_EXAMPLE
    for fn, tested in ((incrr, [0, 16, 25]), (incrr_plus, [0, 1, 4])):
        r = fn(example_dag, 3, TC_EXAMPLE)
        assert [s.N for s in r.steps] == [27, 42, 60]
        assert [s.tested for s in r.steps] == tested
        assert r.steps[2].lam == 6
        assert r.alpha == pytest.approx(0.857, abs=1e-3)
        assert r.at(2)[0] == 42


def test_fixture_class_counts(example_dag):
    r = incrr_plus(example_dag, 3, TC_EXAMPLE)
    assert [(s.classes_anc, s.classes_desc) for s in r.steps] == [(1, 1), (1, 1), (2, 2)]


@pytest.mark.parametrize("algo", ["blrr", "incrr", "incrrplus"])
def test_k_zero(example_dag, algo):
    r = run(algo, example_dag, 0, TC_EXAMPLE)
    assert (r.N, r.alpha, r.tested) == (0, 0.0, 0)


def test_k_one_shortcut():
    for d in dag_suite(20, 20, seed=40):
        tc = tc_size(d).total
        for fn in (incrr, incrr_plus):
            r = fn(d, 1, tc)
            s = r.steps[0]
            assert s.tested == 0
            assert r.N == s.a_size * s.d_size - 1


def test_negative_k_and_unknown_algo(example_dag):
    with pytest.raises(UsageError):
        incrr(example_dag, -1, TC_EXAMPLE)
    with pytest.raises(UsageError):
        run("fastrr", example_dag, 1, TC_EXAMPLE)


def test_tc_too_small_is_rejected(example_dag):
    with pytest.raises(UsageError):
        blrr(example_dag, 15, 10)


def test_three_way_agreement_with_oracle():
    for d in dag_suite(40, 25, seed=41):
        order = rank_nodes(d).order
        tc = tc_size(d).total
        full_inc = incrr(d, d.node_count, tc)
        full_plus = incrr_plus(d, d.node_count, tc)
        for k in range(d.node_count + 1):
            expected = coverage_count(d, build_labels(d, order[:k]))
            assert blrr(d, k, tc).N == expected
            assert full_inc.at(k)[0] == expected
            assert full_plus.at(k)[0] == expected
        assert full_inc.N == full_plus.N == tc


def test_monotone_alpha_and_no_double_counting():
    for d in dag_suite(20, 30, seed=42):
        tc = tc_size(d).total
        r = incrr_plus(d, d.node_count, tc)
        ns = [s.N for s in r.steps]
        assert ns == sorted(ns)
        assert sum(s.n_i for s in r.steps) == r.N == tc
        assert all(0 <= s.alpha <= 1 for s in r.steps)


def test_lambda_equal_and_bounds_per_step():
    for d in dag_suite(30, 30, seed=43):
        tc = tc_size(d).total
        a = incrr(d, d.node_count, tc)
        b = incrr_plus(d, d.node_count, tc)
        for sa, sb in zip(a.steps, b.steps):
            assert (sa.lam, sa.n_i) == (sb.lam, sb.n_i)
            assert sb.tested <= sa.tested
            if sa.i >= 2:
                assert sa.tested == sa.a_size * sa.d_size
                assert sb.tested == sb.classes_anc * sb.classes_desc
            assert sb.classes_anc <= min(sb.a_size, 2 ** (sb.i - 1))
            assert sb.classes_desc <= min(sb.d_size, 2 ** (sb.i - 1))


def test_partition_matches_exact_grouping_and_refines():
    for d in dag_suite(25, 30, seed=44):
        history = []
        bad = []

        def probe(p):
            history.append((list(p.state.id_anc), list(p.state.id_desc), p))

        r = incrr_plus(d, d.node_count, tc_size(d).total, probe=probe)
        assert r.k == len(history)
        # the probe fires after commit, so labels are L^i
        for ids_anc, ids_desc, p in history:
            anc_groups = [[x for x in p.step.ancestors if ids_anc[x] == e.new_id] for e in p.h_anc.values()]
            desc_groups = [[x for x in p.step.descendants if ids_desc[x] == e.new_id] for e in p.h_desc.values()]
            if not verify_partition(p.labels.truncated(p.step.rank - 1), p.step.ancestors, "forward", anc_groups):
                bad.append(p.step.rank)
            if not verify_partition(p.labels.truncated(p.step.rank - 1), p.step.descendants, "backward", desc_groups):
                bad.append(p.step.rank)
        assert bad == []
        for (prev_a, prev_d, _), (cur_a, cur_d, _) in zip(history, history[1:]):
            n = d.node_count
            for x in range(n):
                for y in range(n):
                    if cur_a[x] == cur_a[y]:
                        assert prev_a[x] == prev_a[y]
                    if cur_d[x] == cur_d[y]:
                        assert prev_d[x] == prev_d[y]


def test_alpha_stop_and_on_step(example_dag):
    r = incrr(example_dag, 15, TC_EXAMPLE, alpha_stop=0.6)
    assert r.k == 2 and r.N == 42
    seen = []
    r = incrr_plus(example_dag, 15, TC_EXAMPLE, on_step=lambda rec: seen.append(rec.i) or rec.i == 3)
    assert seen == [1, 2, 3] and r.k == 3 and r.N == 60


def test_probe_sees_committed_labels(example_dag):
    ks = []
    incrr(example_dag, 3, TC_EXAMPLE, probe=lambda p: ks.append(p.labels.k))
    assert ks == [1, 2, 3]


def test_csv_and_json(example_dag):
    r = incrr_plus(example_dag, 3, TC_EXAMPLE)
    rows = list(csv.DictReader(io.StringIO(r.to_csv())))
    assert tuple(rows[0].keys()) == CSV_FIELDS
    assert [int(x["N_i"]) for x in rows] == [27, 42, 60]
    assert rows[2]["lambda"] == "6"
    summary = json.loads(r.to_json())
    assert summary["N"] == 60 and summary["tested"] == 5 and summary["algorithm"] == "incrrplus"
    assert r.to_csv(header=False).count("\n") == 3


def test_replay_examples(label_seq):
    b = replay("blrr", label_seq, SETS, TC_EXAMPLE)
    assert (b.N, b.tested) == (60, 80)
    b2 = replay("blrr", label_seq[:3], SETS[:2], TC_EXAMPLE)
    assert (b2.N, b2.tested, b2.a_union, b2.d_union) == (42, 56, 8, 7)
    for algo, tested in (("incrr", 41), ("incrrplus", 5)):
        r = replay(algo, label_seq, SETS, TC_EXAMPLE)
        assert [s.N for s in r.steps] == [27, 42, 60]
        assert r.steps[2].lam == 6 and r.tested == tested
        assert r.steps[1].alpha == pytest.approx(0.6, abs=1e-3)
        assert r.alpha == pytest.approx(0.857, abs=1e-3)


def test_replay_rejects_bad_inputs(label_seq):
    with pytest.raises(UsageError):
        replay("incrr", label_seq[:2], SETS, TC_EXAMPLE)
    with pytest.raises(UsageError):
        replay("nope", label_seq, SETS, TC_EXAMPLE)


def test_overlapping_sets_flag_a_cycle():
    l1 = HopLabels.from_lists([0], [[1], [1], []], [[1], [1], []])
    with pytest.raises(ConsistencyError):
        replay("incrr", [HopLabels(3), l1], [([0, 1], [0, 1])], 3)
    with pytest.raises(UsageError):
        replay("incrr", [HopLabels(3), HopLabels(3)], [([0], [0])], 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 18), st.integers(0, 10_000), st.sampled_from([0.05, 0.15, 0.3, 0.5]))
def test_incremental_matches_baseline(n, seed, p):
    d = random_dag(random.Random(seed), n, p)
    tc = tc_size(d).total
    k = seed % (n + 1)
    assert blrr(d, k, tc).N == incrr(d, k, tc).N == incrr_plus(d, k, tc).N


def test_edgeless_graph():
    d = Dag.from_edges(5, [])
    r = incrr_plus(d, 5, 0)
    assert r.N == 0 and r.alpha == 0.0
