"""Command line interface: ``reachratio <command> ...``.

Exit codes: 0 ok, 1 correctness failure, 2 usage or I/O error. Progress goes
to stderr, data to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .bench import Workload, gen_workload, graph_hash, run_bench
from .engine import ALGORITHMS, CSV_FIELDS, run
from .errors import ConsistencyError, CorrectnessError, ReachRatioError, UsageError
from .graph import FORMATS, Dag, compute_stats, condense, parse_edge_list, rank_nodes, write_edge_list, write_gra
from .labels import HopLabels, build_labels, index_size
from .oracle import tc_size

log = logging.getLogger("reachratio")

ORACLE_TC_LIMIT = 200_000
ISR_LIMIT = 20_000


@dataclass
class RunConfig:
    input: Path
    format: str = "edge-list"
    algorithm: str = "all"
    k_list: list[int] = field(default_factory=lambda: [1])
    tc_value: int | None = None
    tc_file: Path | None = None
    alpha_stop: float | None = None
    seed: int = 0
    out_dir: Path | None = None
    timings: bool = True
    isr: bool | None = None

    def __post_init__(self) -> None:
        if any(k < 0 for k in self.k_list):
            raise UsageError("k values must be non-negative")
        self.k_list = sorted(set(self.k_list))
        if self.alpha_stop is not None and not 0 < self.alpha_stop <= 1:
            raise UsageError("--alpha-stop must lie in (0, 1]")
        if self.algorithm not in ALGORITHMS + ("all",):
            raise UsageError(f"unknown algorithm {self.algorithm!r}")

    @property
    def tc_source(self) -> str:
        if self.tc_value is not None:
            return "flag-value"
        if self.tc_file is not None:
            return "file"
        return "oracle"


def parse_k_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad k list {text!r}") from None


def doubling(limit: int) -> list[int]:
    ks, k = [], 1
    while k < limit:
        ks.append(k)
        k *= 2
    ks.append(limit)
    return ks


def load_dag(path: Path, fmt: str) -> Dag:
    with open(path, "rb") as fp:
        g = parse_edge_list(fp, fmt)
    if g.duplicates_dropped or g.self_loops_dropped:
        log.info("dropped %d duplicate edges and %d self-loops", g.duplicates_dropped, g.self_loops_dropped)
    dag = condense(g)
    log.info("condensed %d nodes / %d edges into %d nodes / %d edges", g.node_count, len(g.edges), dag.node_count, dag.edge_count)
    return dag


def read_tc_file(path: Path) -> int:
    text = Path(path).read_text().strip()
    try:
        if text.startswith("{"):
            return int(json.loads(text)["total"])
        return int(text.split()[0])
    except (ValueError, KeyError, IndexError):
        raise UsageError(f"cannot read a TC total from {path}") from None


def resolve_tc(config: RunConfig, dag: Dag) -> int:
    if config.tc_value is not None:
        return config.tc_value
    if config.tc_file is not None:
        return read_tc_file(config.tc_file)
    if dag.node_count > ORACLE_TC_LIMIT:
        raise UsageError(f"graph has {dag.node_count} nodes; supply --tc or --tc-file above {ORACLE_TC_LIMIT}")
    log.info("computing TC size with the BFS oracle")
    return tc_size(dag).total


def cmd_rr(config: RunConfig) -> int:
    dag = load_dag(config.input, config.format)
    tc_total = resolve_tc(config, dag)
    ranking = rank_nodes(dag).order
    k_list = [min(k, dag.node_count) for k in config.k_list]
    k_list = sorted(set(k_list))
    k_max = max(k_list, default=0)
    algos = list(ALGORITHMS) if config.algorithm == "all" else [config.algorithm]

    want_isr = config.isr if config.isr is not None else dag.node_count <= ISR_LIMIT
    full_size = None
    if want_isr:
        log.info("building full labels for ISR")
        full_size = index_size(build_labels(dag, ranking))
    sizes: dict[int, int] = {}
    if want_isr and k_list:
        partial = build_labels(dag, ranking[:k_max])
        for k in k_list:
            sizes[k] = index_size(partial.truncated(k)) if k < k_max else index_size(partial)

    def isr_of(k: int) -> float | None:
        if full_size is None:
            return None
        return 1.0 if full_size == 0 else sizes[k] / full_size

    ms = (lambda x: round(x, 3)) if config.timings else (lambda x: 0.0)
    results: dict[str, dict[str, dict]] = {}
    csv_parts: list[str] = []
    for algo in algos:
        log.info("running %s", algo)
        per_k: dict[str, dict] = {}
        if algo == "blrr":
            for k in k_list:
                rep = run(algo, dag, k, tc_total, hop_nodes=ranking)
                per_k[str(k)] = {
                    "N": rep.N,
                    "alpha": rep.alpha,
                    "isr": isr_of(k),
                    "tested": rep.tested,
                    "step1_ms": ms(rep.step1_ms),
                    "step2_ms": ms(rep.step2_ms),
                }
                csv_parts.append(_csv_body(rep, config.timings, k))
        else:
            rep = run(algo, dag, k_max, tc_total, hop_nodes=ranking, alpha_stop=config.alpha_stop)
            for k in k_list:
                if k > rep.k:
                    break
                n_k, alpha, tested = rep.at(k)
                steps = rep.steps[:k]
                per_k[str(k)] = {
                    "N": n_k,
                    "alpha": alpha,
                    "isr": isr_of(k),
                    "tested": tested,
                    "step1_ms": ms(sum(s.step1_ms for s in steps)),
                    "step2_ms": ms(sum(s.step2_ms for s in steps)),
                }
            csv_parts.append(_csv_body(rep, config.timings, None))
        results[algo] = per_k

    if len(algos) > 1:
        for k in k_list:
            ns = {a: results[a][str(k)]["N"] for a in algos if str(k) in results[a]}
            if len(set(ns.values())) > 1:
                raise CorrectnessError(f"algorithms disagree at k={k}: {ns}")

    summary = {
        "input": str(config.input),
        "graph": compute_stats(dag).as_dict(),
        "tc_total": tc_total,
        "tc_source": config.tc_source,
        "k_list": k_list,
        "results": results,
    }
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if config.out_dir is None:
        sys.stdout.write(text)
        return 0
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rr_summary.json").write_text(text)
    (out / "rr_steps.csv").write_text(",".join(CSV_FIELDS) + "\n" + "".join(csv_parts))
    (out / "rr_curve.dat").write_text(_curve_table(results, algos, k_list))
    log.info("wrote reports to %s", out)
    return 0


def _csv_body(rep, timings: bool, k: int | None) -> str:
    if not timings:
        for s in rep.steps:
            s.step1_ms = s.step2_ms = 0.0
    body = rep.to_csv(header=False)
    if k is not None and rep.algorithm == "blrr":
        # one baseline run per k; tag rows by the k they belong to
        body = "".join(f"{line.replace('blrr', f'blrr@{k}', 1)}\n" for line in body.splitlines())
    return body


def _curve_table(results: dict, algos: list[str], k_list: list[int]) -> str:
    lines = ["# k " + " ".join(f"{a}_alpha" for a in algos) + " isr"]
    for k in k_list:
        row = [str(k)]
        isr_value = None
        for a in algos:
            entry = results[a].get(str(k))
            row.append("nan" if entry is None else f"{entry['alpha']:.6f}")
            if entry is not None and entry["isr"] is not None:
                isr_value = entry["isr"]
        row.append("nan" if isr_value is None else f"{isr_value:.6f}")
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def cmd_tc(args) -> int:
    dag = load_dag(args.input, args.format)
    summary = tc_size(dag)
    if args.per_node:
        with open(args.per_node, "w") as fp:
            fp.write("node,reach\n")
            for v, c in enumerate(summary.per_node_reach):
                fp.write(f"{v},{c}\n")
    print(summary.total)
    return 0


def cmd_condense(args) -> int:
    dag = load_dag(args.input, args.format)
    writer = write_gra if args.out_format == "gra" else write_edge_list
    if args.out:
        with open(args.out, "w") as fp:
            writer(dag, fp)
    else:
        writer(dag, sys.stdout)
    if args.map:
        with open(args.map, "w") as fp:
            fp.write("raw,dag\n")
            for x, v in enumerate(dag.scc_map):
                fp.write(f"{x},{v}\n")
    return 0


def cmd_stats(args) -> int:
    dag = load_dag(args.input, args.format)
    print(json.dumps(compute_stats(dag, with_reach=args.reach).as_dict(), indent=2, sort_keys=True))
    return 0


def cmd_labels(args) -> int:
    dag = load_dag(args.input, args.format)
    if args.k < 0:
        raise UsageError("--k must be non-negative")
    labels = build_labels(dag, rank_nodes(dag).order[: args.k])
    with open(args.out, "wb") as fp:
        labels.dump(fp)
    log.info("wrote labels for k=%d (%d entries) to %s", labels.k, index_size(labels), args.out)
    return 0


def cmd_workload(args) -> int:
    dag = load_dag(args.input, args.format)
    w = gen_workload(dag, args.n, args.seed)
    text = w.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench(args) -> int:
    dag = load_dag(args.input, args.format)
    with open(args.labels, "rb") as fp:
        labels = HopLabels.load(fp)
    if labels.node_count != dag.node_count:
        raise UsageError(f"label snapshot has {labels.node_count} nodes, graph has {dag.node_count}")
    with open(args.workload) as fp:
        w = Workload.from_csv(fp)
    if w.graph and w.graph != graph_hash(dag):
        raise UsageError("workload was generated for a different graph")
    stats = run_bench(dag, labels, w)
    data = stats.as_dict()
    data.pop("extra")
    print(json.dumps(data, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reachratio", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def graph_args(sp):
        sp.add_argument("input", type=Path, help="graph file")
        sp.add_argument("--format", choices=FORMATS, default="edge-list")

    rr = sub.add_parser("rr", help="reachability ratio of the top-k hop-nodes")
    graph_args(rr)
    rr.add_argument("--algo", choices=ALGORITHMS + ("all",), default="all")
    ks = rr.add_mutually_exclusive_group()
    ks.add_argument("--k", default="1", help="comma separated k values")
    ks.add_argument("--sweep", type=int, metavar="K", help="doubling sweep 1,2,4,...,K")
    tc = rr.add_mutually_exclusive_group()
    tc.add_argument("--tc", type=int, help="TC size of the condensed graph")
    tc.add_argument("--tc-file", type=Path, help="file holding the TC size (integer or {\"total\": N})")
    rr.add_argument("--alpha-stop", type=float, help="stop incremental runs once alpha reaches this")
    rr.add_argument("--seed", type=int, default=0)
    rr.add_argument("--out-dir", type=Path, help="write rr_summary.json, rr_steps.csv, rr_curve.dat here")
    rr.add_argument("--no-timings", action="store_true", help="zero all timing columns (byte-stable reports)")
    isr = rr.add_mutually_exclusive_group()
    isr.add_argument("--isr", dest="isr", action="store_true", default=None)
    isr.add_argument("--no-isr", dest="isr", action="store_false")

    t = sub.add_parser("tc", help="TC size by per-node BFS")
    graph_args(t)
    t.add_argument("--per-node", type=Path, help="also write node,reach CSV")

    c = sub.add_parser("condense", help="condense SCCs and write the DAG")
    graph_args(c)
    c.add_argument("--out", type=Path)
    c.add_argument("--out-format", choices=FORMATS, default="gra")
    c.add_argument("--map", type=Path, help="write raw,dag node mapping CSV")

    s = sub.add_parser("stats", help="graph statistics of the condensed DAG")
    graph_args(s)
    s.add_argument("--reach", action="store_true", help="include average reach (quadratic)")

    lb = sub.add_parser("labels", help="build a label snapshot for the top-k hop-nodes")
    graph_args(lb)
    lb.add_argument("--k", type=int, required=True)
    lb.add_argument("--out", type=Path, required=True)

    w = sub.add_parser("workload", help="generate an equal workload")
    graph_args(w)
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--out", type=Path)

    b = sub.add_parser("bench", help="answer a workload with a label snapshot")
    graph_args(b)
    b.add_argument("--labels", type=Path, required=True)
    b.add_argument("--workload", type=Path, required=True)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "rr":
            k_list = doubling(args.sweep) if args.sweep is not None else parse_k_list(args.k)
            config = RunConfig(
                input=args.input,
                format=args.format,
                algorithm=args.algo,
                k_list=k_list,
                tc_value=args.tc,
                tc_file=args.tc_file,
                alpha_stop=args.alpha_stop,
                seed=args.seed,
                out_dir=args.out_dir,
                timings=not args.no_timings,
                isr=args.isr,
            )
            return cmd_rr(config)
        handler = {
            "tc": cmd_tc,
            "condense": cmd_condense,
            "stats": cmd_stats,
            "labels": cmd_labels,
            "workload": cmd_workload,
            "bench": cmd_bench,
        }[args.command]
        return handler(args)
    except (CorrectnessError, ConsistencyError) as exc:
        print(f"reachratio: correctness failure: {exc}", file=sys.stderr)
        return 1
    except (ReachRatioError, OSError) as exc:
        print(f"reachratio: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
