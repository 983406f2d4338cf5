"""Command-line entry point: ingest, run, verify, report.

``run`` executes one algorithm and emits a per-vertex results file
(``id<TAB>attr1[ attr2 ...]``, ascending id) plus a JSON-lines metrics file
(one record per superstep, one summary record). ``verify`` additionally
checks the run against the built-in reference implementations. ``report``
renders figures from a metrics file. Exit codes: 0 ok, 1 usage, 2 ingest,
3 run, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

from . import algorithms, oracle
from .algorithms import IN_SET
from .engine import EngineConfig, RunResult, run_algorithm
from .errors import IngestError, NexgraphError, ParameterError
from .ingest import IngestedGraph, dump_edges, ingest

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INGEST = 2
EXIT_RUN = 3
EXIT_VERIFY = 4


@dataclass
class RunConfig:
    """Everything one run needs; mirrors the CLI flags."""

    input_path: str
    algorithm: str
    workers: int = 1
    undirected: bool = False
    theta: int | None = None
    theta_frac: int = 50
    activation_policy: str = "auto"
    sync_policy: str = "critical"
    store_mode: str = "memory"
    store_dir: str | None = None
    seed: int = 0
    source: int | None = None
    damping: float = 0.85
    iterations: int = 10
    results_path: str | None = None
    metrics_path: str | None = None
    plots_dir: str | None = None
    audit: bool = False
    check_guests: bool = False
    max_supersteps: int | None = None
    barrier_timeout: float = 60.0
    params: dict = field(default_factory=dict)


@dataclass
class RunOutcome:
    graph: IngestedGraph
    spec: object
    result: RunResult
    theta: int


def build_spec(config: RunConfig, graph: IngestedGraph):
    """Instantiate the algorithm with translated/validated parameters."""
    name = config.algorithm
    params: dict = {}
    if name in ("bfs", "ppr"):
        if config.source is None:
            raise ParameterError(f"{name} requires --source")
        try:
            params["source"] = graph.idmap.to_internal(config.source)
        except IngestError:
            raise ParameterError(
                f"source vertex {config.source} is not in the graph"
            ) from None
    if name in ("pr", "ppr"):
        params["damping"] = config.damping
        params["n_itr"] = config.iterations
    if name in ("mis", "mm"):
        params["seed"] = config.seed
    params.update(config.params)
    return algorithms.build(name, **params)


def execute_run(config: RunConfig, graph: IngestedGraph | None = None) -> RunOutcome:
    """Ingest (unless given), build, run; no files are written here."""
    if graph is None:
        graph = ingest(config.input_path, undirected=config.undirected)
    spec = build_spec(config, graph)
    theta = (
        config.theta
        if config.theta is not None
        else graph.meta.n // max(1, config.theta_frac)
    )
    engine_cfg = EngineConfig(
        k=config.workers,
        theta=theta,
        activation_policy=config.activation_policy,
        sync_policy=config.sync_policy,
        store_mode=config.store_mode,
        store_dir=config.store_dir,
        seed=config.seed,
        max_supersteps=config.max_supersteps,
        barrier_timeout=config.barrier_timeout,
        check_guests=config.check_guests,
        audit=config.audit,
    )
    result = run_algorithm(graph, spec, engine_cfg)
    return RunOutcome(graph=graph, spec=spec, result=result, theta=theta)


def _format_slot(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def values_by_external(graph: IngestedGraph, spec, result: RunResult) -> dict[int, tuple]:
    """Final host values keyed by external id, id-valued slots translated."""
    idmap = graph.idmap
    id_attrs = spec.id_attrs
    out = {}
    for internal, value in result.values.items():
        if id_attrs:
            value = tuple(
                idmap.to_external(v) if (pos + 1) in id_attrs and v >= 0 else v
                for pos, v in enumerate(value)
            )
        out[idmap.to_external(internal)] = value
    return out


def external_values(outcome: RunOutcome) -> dict[int, tuple]:
    return values_by_external(outcome.graph, outcome.spec, outcome.result)


def write_results(path, outcome: RunOutcome) -> None:
    values = external_values(outcome)
    with open(path, "w", encoding="utf-8") as fh:
        for ext_id in sorted(values):
            slots = " ".join(_format_slot(v) for v in values[ext_id])
            fh.write(f"{ext_id}\t{slots}\n")


def summary_record(outcome: RunOutcome, config: RunConfig) -> dict:
    result = outcome.result
    rec = {
        "record": "summary",
        "algorithm": config.algorithm,
        "n": outcome.graph.meta.n,
        "m": outcome.graph.meta.m,
        "workers": config.workers,
        "theta": outcome.theta,
        "activation_policy": config.activation_policy,
        "sync_policy": config.sync_policy,
        "store_mode": config.store_mode,
        "seed": config.seed,
        "supersteps": result.supersteps,
        "main_supersteps": result.main_supersteps(),
        "bytes_data": result.comm.bytes_data,
        "bytes_control": result.comm.bytes_control,
        "messages": result.comm.messages,
        "wall_time_s": result.wall_time_s,
    }
    if outcome.spec.aggregate == "sum":
        rec["aggregate"] = sum(v[0] for v in result.values.values())
    return rec


def metrics_records(outcome: RunOutcome, config: RunConfig) -> list[dict]:
    records = []
    for s in outcome.result.stats:
        records.append(
            {
                "record": "superstep",
                "plan": s.plan,
                "plan_kind": s.plan_kind,
                "superstep": s.superstep,
                "superstep_in_plan": s.superstep_in_plan,
                "n_change": s.n_change,
                "active": s.active_count,
                "mode": s.activation_mode,
                "bytes_data_delta": s.bytes_data_delta,
                "wall_time_s": s.wall_time_s,
            }
        )
    records.append(summary_record(outcome, config))
    return records


def write_metrics(path, outcome: RunOutcome, config: RunConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in metrics_records(outcome, config):
            fh.write(json.dumps(rec) + "\n")


# -- verification -------------------------------------------------------------


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def verify_outcome(outcome: RunOutcome) -> tuple[bool, str]:
    """Compare a finished run against its oracle or validator."""
    graph = outcome.graph
    name = outcome.spec.name
    ext_edges = [
        (graph.idmap.to_external(a), graph.idmap.to_external(b))
        for a, b in graph.edges
    ]
    vertices = list(graph.idmap.external)
    got = external_values(outcome)

    if name == "mis":
        ok, why = oracle.validate_mis(
            ext_edges, {v: val[0] == IN_SET for v, val in got.items()}, vertices
        )
        return ok, why
    if name == "mm":
        ok, why = oracle.validate_mm(
            ext_edges, {v: val[2] for v, val in got.items()}, vertices
        )
        return ok, why
    if name == "tc":
        expected = oracle.tc(ext_edges, vertices)
        total = sum(val[0] for val in got.values())
        if total != expected:
            return False, f"triangle total {total} != oracle {expected}"
        return True, "ok"

    if name == "bfs":
        src_internal = outcome.spec.params["source"]
        expected = oracle.bfs(
            ext_edges, graph.idmap.to_external(src_internal), vertices
        )
    elif name == "cc":
        expected = oracle.cc(ext_edges, vertices)
    elif name == "pr":
        expected = oracle.pagerank(
            ext_edges,
            outcome.spec.params["damping"],
            outcome.spec.params["n_itr"],
            vertices,
        )
    elif name == "ppr":
        src_internal = outcome.spec.params["source"]
        expected = oracle.ppr(
            ext_edges,
            graph.idmap.to_external(src_internal),
            outcome.spec.params["damping"],
            outcome.spec.params["n_itr"],
            vertices,
        )
    elif name == "core":
        expected = oracle.kcore(ext_edges, vertices)
    elif name == "color":
        expected = oracle.coloring(ext_edges, vertices)
    else:
        return False, f"no oracle for algorithm {name!r}"

    approx = name in ("pr", "ppr")
    slot = 1 if name == "color" else 0  # color lives behind the degree
    for v in sorted(expected):
        want = expected[v]
        have = got[v][slot]
        same = _close(have, want) if approx else have == want
        if not same:
            return False, f"vertex {v}: engine {have!r} != oracle {want!r}"
    return True, "ok"


# -- argument handling ---------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--input", required=True, help="graph file")
    p.add_argument("--algo", required=True, choices=sorted(algorithms.REGISTRY))
    p.add_argument("--workers", "-k", type=int, default=1)
    p.add_argument("--undirected", action="store_true", help="symmetrize edges")
    p.add_argument("--theta", type=int, default=None, help="absolute activation threshold")
    p.add_argument(
        "--theta-frac",
        type=int,
        default=50,
        help="threshold = n // THETA_FRAC when --theta is not given",
    )
    p.add_argument("--activation", choices=("auto", "neighbor", "all"), default="auto")
    p.add_argument("--sync", choices=("critical", "full"), default="critical")
    p.add_argument("--store", choices=("memory", "disk"), default="memory")
    p.add_argument("--store-dir", default=None, help="directory for index segments")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--source", type=int, default=None, help="source vertex (bfs, ppr)")
    p.add_argument("--damping", type=float, default=0.85)
    p.add_argument("--iterations", type=int, default=10, help="rank iterations")
    p.add_argument("--results", default=None, help="per-vertex output file")
    p.add_argument("--metrics", default=None, help="JSONL metrics file")
    p.add_argument("--plots", default=None, help="directory for metric figures")
    p.add_argument("--audit", action="store_true", help="log disk index accesses")
    p.add_argument(
        "--check-guests",
        action="store_true",
        help="assert host/guest consistency at every barrier",
    )
    p.add_argument("--max-supersteps", type=int, default=None)
    p.add_argument(
        "--barrier-timeout", type=float, default=60.0,
        help="seconds before a stalled barrier aborts the run",
    )


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        input_path=args.input,
        algorithm=args.algo,
        workers=args.workers,
        undirected=args.undirected,
        theta=args.theta,
        theta_frac=args.theta_frac,
        activation_policy=args.activation,
        sync_policy=args.sync,
        store_mode=args.store,
        store_dir=args.store_dir,
        seed=args.seed,
        source=args.source,
        damping=args.damping,
        iterations=args.iterations,
        results_path=args.results,
        metrics_path=args.metrics,
        plots_dir=args.plots,
        audit=args.audit,
        check_guests=args.check_guests,
        max_supersteps=args.max_supersteps,
        barrier_timeout=args.barrier_timeout,
    )


def _finish_run(outcome: RunOutcome, config: RunConfig) -> None:
    if config.results_path:
        write_results(config.results_path, outcome)
    if config.metrics_path:
        write_metrics(config.metrics_path, outcome, config)
    if config.plots_dir:
        from .report import render_metrics  # matplotlib import is heavy

        render_metrics(metrics_records(outcome, config), config.plots_dir)
    summary = summary_record(outcome, config)
    print(
        f"{config.algorithm}: {summary['supersteps']} supersteps, "
        f"{summary['bytes_data']} data bytes, "
        f"{summary['wall_time_s']:.3f}s engine time"
    )
    if outcome.result.consistency_violations:
        print(
            f"warning: {len(outcome.result.consistency_violations)} "
            "host/guest consistency violations",
            file=sys.stderr,
        )


def main(argv=None) -> int:
    parser = _Parser(prog="nexgraph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an algorithm")
    _add_run_flags(run_p)

    verify_p = sub.add_parser("verify", help="execute and compare against the oracle")
    _add_run_flags(verify_p)

    ingest_p = sub.add_parser("ingest", help="parse a graph file and print its shape")
    ingest_p.add_argument("--input", required=True)
    ingest_p.add_argument("--undirected", action="store_true")
    ingest_p.add_argument("--dump-edges", default=None, help="write normalized edges")

    report_p = sub.add_parser("report", help="render figures from a metrics file")
    report_p.add_argument("--metrics", required=True)
    report_p.add_argument("--out", required=True, help="output directory")

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse exits; keep main() returning codes
        return int(e.code or 0)

    if args.command == "ingest":
        try:
            graph = ingest(args.input, undirected=args.undirected)
        except (OSError, IngestError) as e:
            print(f"ingest error: {e}", file=sys.stderr)
            return EXIT_INGEST
        print(
            f"n={graph.meta.n} m={graph.meta.m} "
            f"directed={str(graph.meta.directed).lower()}"
        )
        if args.dump_edges:
            dump_edges(graph, args.dump_edges)
        return EXIT_OK

    if args.command == "report":
        from .report import render_metrics

        try:
            with open(args.metrics, "r", encoding="utf-8") as fh:
                records = [json.loads(line) for line in fh if line.strip()]
        except (OSError, json.JSONDecodeError) as e:
            print(f"cannot read metrics: {e}", file=sys.stderr)
            return EXIT_INGEST
        paths = render_metrics(records, args.out)
        for p in paths:
            print(p)
        return EXIT_OK

    config = _config_from_args(args)
    try:
        graph = ingest(config.input_path, undirected=config.undirected)
    except (OSError, IngestError) as e:
        print(f"ingest error: {e}", file=sys.stderr)
        return EXIT_INGEST

    try:
        spec_check = build_spec(config, graph)  # validates parameters early
    except ParameterError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    del spec_check

    try:
        outcome = execute_run(config, graph=graph)
    except NexgraphError as e:
        print(f"run error [{type(e).__name__}]: {e}", file=sys.stderr)
        return EXIT_RUN

    _finish_run(outcome, config)

    if args.command == "verify":
        ok, why = verify_outcome(outcome)
        if not ok:
            print(f"VERIFY FAIL ({config.algorithm}): {why}", file=sys.stderr)
            return EXIT_VERIFY
        print(f"VERIFY PASS ({config.algorithm})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
