"""The same queries under the sequential, p-worker and map/reduce executors, on two partitionings.

    python3 demos/modes_and_schemes.py

A tightly clustered split (few connected components per partition) is
compared with a random scatter of the same graph, which is how the
MIN-CC scheme choice earns its keep: fewer components means fewer
boundary crossings and fewer partition loads.
"""

from __future__ import annotations

from statistics import fmean

from pgqp.benchmark import BenchmarkConfig, build_benchmark
from pgqp.opat import run_opat
from pgqp.parallel import run_mapreduce_mp, run_traditional_mp
from pgqp.partition import choose_scheme, extend_with_cutset, partition_builtin, random_assignment, scheme_metrics


def main() -> None:
    bench = build_benchmark(BenchmarkConfig(nv=4000, ne=12_000))
    g = bench.graph
    schemes = {
        "greedy": extend_with_cutset(g, partition_builtin(g, 4, 0, "greedy")),
        "scatter": extend_with_cutset(g, random_assignment(g, 4, 1, "scatter")),
    }
    metrics = [scheme_metrics(p, n) for n, p in schemes.items()]
    for m in metrics:
        print(f"{m.scheme_name}: total_cc {m.total_cc}")
    print(f"MIN-CC picks {choose_scheme(metrics, 'MIN-CC')}\n")

    print("scheme\tquery\tmode\tAL\titerations\tanswers")
    for name, parts in schemes.items():
        ratios = []
        for qname, q in bench.queries.items():
            runs = {
                "opat": run_opat(parts, q, bench.catalog),
                "trad-p2": run_traditional_mp(parts, q, bench.catalog, p=2),
                "mr": run_mapreduce_mp(parts, q, bench.catalog),
            }
            answers = {log.answers for _, log in runs.values()}
            assert len(answers) == 1, "executors disagree"
            for mode, (_, log) in runs.items():
                print(f"{name}\t{qname}\t{mode}\t{log.AL}\t{log.num_iterations}\t{log.answers}")
            ratios.append(runs["opat"][1].ratio)
        print(f"{name}: mean OPAT load ratio {fmean(ratios):.3f}\n")


if __name__ == "__main__":
    main()
