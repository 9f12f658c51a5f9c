"""Command-line entry point: ``pgqp partition|catalog|plan|run|campaign|gen``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .campaign import CampaignError, run_campaign
from .graph import Catalog, GraphParseError, build_catalog, read_graph, write_graph
from .opat import HEURISTICS, make_plans, run_opat
from .parallel import run_mapreduce_mp, run_traditional_mp
from .partition import (AssignmentError, PartitionDirectory, choose_scheme, extend_with_cutset,
                        import_assignment, partition_builtin, save_partitions, scheme_metrics)
from .planner import format_plan
from .query import Query, QueryValidationError, read_query
from .synthetic import GeneratorError, generate_synthetic

RUN_ROOT_ENV = "PGQP_RUN_ROOT"


def load_catalog_for(path, query: Query) -> Catalog:
    """Load a catalog keeping only the triples the query's predicates can use."""
    nodes = [p for d in query.disjuncts for p in d.nodes.values()]
    edges = [e.pred for d in query.disjuncts for e in d.edges]

    def keep(a, e, b):
        return (any(p.matches(a) for p in nodes) and any(p.matches(e) for p in edges)
                and any(p.matches(b) for p in nodes))

    with open(path, encoding="utf-8") as fh:
        return Catalog.load(fh, keep)


def default_run_dir(query_path: str, mode: str, heuristic: str, seed: int) -> Path:
    root = Path(os.environ.get(RUN_ROOT_ENV, "runs"))
    return root / f"{Path(query_path).stem}-{mode}-{heuristic}-{seed}"


def cmd_gen(args) -> int:
    template = read_graph(args.template) if args.template else None
    g = generate_synthetic(args.nv, args.ne, args.vlabels, args.elabels, template, args.embed_count,
                           args.seed, args.locality, args.window)
    with open(args.output, "w", encoding="utf-8") as fh:
        write_graph(g, fh)
    print(f"wrote {len(g.vertices)} vertices, {len(g.edges)} edges to {args.output}")
    return 0


def cmd_catalog(args) -> int:
    g = read_graph(args.graph)
    with open(args.output, "w", encoding="utf-8") as fh:
        build_catalog(g).dump(fh)
    return 0


def cmd_partition(args) -> int:
    g = read_graph(args.graph)
    if args.assignment:
        assignments = []
        for spec in args.assignment:
            name, _, path = spec.partition("=") if "=" in spec else (Path(spec).stem, "", spec)
            with open(path, encoding="utf-8") as fh:
                assignments.append(import_assignment(g, fh, args.k, name))
    else:
        assignments = [partition_builtin(g, args.k, args.seed)]
    extended = {a.scheme_name: extend_with_cutset(g, a) for a in assignments}
    metrics = [scheme_metrics(parts, name) for name, parts in extended.items()]
    for m in metrics:
        print(f"scheme {m.scheme_name} total_cc {m.total_cc} "
              + " ".join(f"P{pid}:{c}" for pid, c in sorted(m.cc_counts.items())))
    if args.choose == "explicit":
        if len(extended) > 1 and args.scheme is None:
            raise AssignmentError("--choose explicit with several assignments needs --scheme")
        name = args.scheme or metrics[0].scheme_name
        if name not in extended:
            raise AssignmentError(f"no scheme named {name!r}")
    else:
        name = choose_scheme(metrics, args.choose, args.seed)
    save_partitions(extended[name], args.output, name, g)
    print(f"chose {name}; partitions written to {args.output}")
    return 0


def cmd_plan(args) -> int:
    query = read_query(args.query)
    if args.catalog:
        cat = load_catalog_for(args.catalog, query)
    else:
        cat = build_catalog(read_graph(args.graph))
    for plan in make_plans(query, cat):
        sys.stdout.write(format_plan(plan))
    return 0


def _execute(ps, query, cat, args, run_dir):
    if args.mode == "opat":
        return run_opat(ps, query, cat, args.heuristic, args.seed, args.limit, run_dir)
    if args.mode == "trad":
        return run_traditional_mp(ps, query, cat, args.heuristic, args.p, args.seed, args.limit, run_dir)
    return run_mapreduce_mp(ps, query, cat, args.heuristic, args.m, args.seed, args.limit, run_dir)


def _check_mode_flags(args) -> None:
    if args.p is not None and args.mode != "trad":
        raise ValueError("-p applies only to --mode trad")
    if args.m is not None and args.mode != "mr":
        raise ValueError("-m applies only to --mode mr")
    if args.mode == "trad" and args.p is None:
        args.p = 2


def cmd_run(args) -> int:
    _check_mode_flags(args)
    ps = PartitionDirectory(args.parts)
    query = read_query(args.query)
    cat = load_catalog_for(ps.catalog_path(), query)
    run_dir = None
    if not args.in_memory:
        run_dir = Path(args.run_dir) if args.run_dir else default_run_dir(args.query, args.mode,
                                                                          args.heuristic, args.seed)
    books, log = _execute(ps, query, cat, args, run_dir)
    if args.answers:
        from .matching import format_answer

        for a in books.faa.answers:
            print(format_answer(a))
    ratio = "NA" if log.ratio is None else f"{log.ratio:.4f}"
    print(f"answers {log.answers} AL {log.AL} L_ideal {log.l_ideal} ratio {ratio} "
          f"iterations {log.num_iterations} loads {','.join(map(str, log.load_sequence))}")
    if run_dir is not None:
        print(f"run directory {run_dir}")
    return 0


def cmd_campaign(args) -> int:
    schemes = {}
    for d in args.parts:
        ps = PartitionDirectory(d)
        name = ps.scheme_name
        if name in schemes:
            # two directories from the same partitioner; tell them apart by directory
            name = f"{name}@{Path(d).name}"
        if name in schemes:
            raise ValueError(f"scheme {name!r} given twice")
        schemes[name] = ps
    queries = {Path(q).stem: read_query(q) for q in args.query}
    catalog_path = next(iter(schemes.values())).catalog_path()
    with open(catalog_path, encoding="utf-8") as fh:
        cat = Catalog.load(fh)
    try:
        report = run_campaign(queries, schemes, cat, args.heuristics, args.random_seeds, args.seed,
                              args.mode, args.slots)
        status = 0
    except CampaignError as exc:
        print(f"campaign aborted: {exc}", file=sys.stderr)
        report, status = exc.report, 1
    text = report.to_tsv()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    sys.stdout.write("\n" + report.summary() if report.rows else "")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pgqp", description="Partitioned graph query processing.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic graph with planted substructures")
    p.add_argument("--nv", type=int, required=True)
    p.add_argument("--ne", type=int, required=True)
    p.add_argument("--vlabels", type=int, default=2000)
    p.add_argument("--elabels", type=int, default=4000)
    p.add_argument("--template", help="graph file to plant")
    p.add_argument("--embed-count", type=int, default=0)
    p.add_argument("--locality", type=float, default=0.0)
    p.add_argument("--window", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("catalog", help="write catalog statistics for a graph")
    p.add_argument("graph")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("partition", help="partition a graph and write extended partitions")
    p.add_argument("graph")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--assignment", action="append",
                   help="METIS-style assignment file, optionally NAME=PATH; repeat for several schemes")
    p.add_argument("--choose", choices=["min-cc", "max-cc", "random-cc", "explicit"], default="min-cc")
    p.add_argument("--scheme", help="scheme name for --choose explicit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="partition directory")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("plan", help="print the query plan")
    p.add_argument("query")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--catalog")
    src.add_argument("--graph")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="answer a query over a partition directory")
    p.add_argument("--parts", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--mode", choices=["opat", "trad", "mr"], default="opat")
    p.add_argument("--heuristic", choices=HEURISTICS, default="max-sn")
    p.add_argument("-p", type=int, help="worker count for trad (default 2)")
    p.add_argument("-m", type=int, help="mapper slots for mr (default: all eligible)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int)
    p.add_argument("--run-dir", help=f"bookkeeping directory (default under ${RUN_ROOT_ENV} or ./runs)")
    p.add_argument("--in-memory", action="store_true", help="keep SNI/IMA/FAA in memory only")
    p.add_argument("--answers", action="store_true", help="print every answer")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("campaign", help="compare heuristics over queries and schemes")
    p.add_argument("--parts", nargs="+", required=True, help="one partition directory per scheme")
    p.add_argument("--query", nargs="+", required=True)
    p.add_argument("--heuristics", nargs="+", choices=HEURISTICS, default=list(HEURISTICS))
    p.add_argument("--random-seeds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["opat", "trad", "mr"], default="opat")
    p.add_argument("--slots", type=int, help="p or m for the parallel modes")
    p.add_argument("-o", "--output", help="report TSV (default stdout)")
    p.set_defaults(func=cmd_campaign)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphParseError, QueryValidationError, AssignmentError, GeneratorError, ValueError, OSError) as exc:
        print(f"pgqp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
