"""Reachability ratio of partial 2-hop labels over DAGs."""

from .bench import QueryEngine, QueryStats, Workload, answer, gen_workload, run_bench
from .engine import (
    ClassEntry,
    PartitionState,
    RRReport,
    StepRecord,
    blrr,
    count_covered_pairs,
    incrr,
    incrr_plus,
    lambda_pairwise,
    lambda_partitioned,
    partition_step,
    replay,
    step_increment,
)
from .errors import (
    CapacityError,
    ConsistencyError,
    CorrectnessError,
    ParseError,
    ReachRatioError,
    UsageError,
    WorkloadError,
)
from .graph import Dag, DirectedGraph, GraphStats, RankedOrder, compute_stats, condense, parse_edge_list, rank_nodes
from .labels import HopLabels, HopStep, LabelBuilder, build_labels, index_size, isr, process_hop_node
from .oracle import TcSummary, coverage_count, reach, tc_size, verify_partition

__version__ = "0.1.0"
