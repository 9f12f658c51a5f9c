"""Compare the partition-choice heuristics on the committed synthetic benchmark.

    python3 demos/heuristic_benchmark.py [random-seeds]

Builds the seeded 10,000-vertex graph with 20 planted template copies,
splits it four ways and runs ten queries under MAX-SN, MIN-SN and
RANDOM-SN (averaged over seeds). Takes about ten seconds.
"""

from __future__ import annotations

import sys
from dataclasses import replace

from pgqp.benchmark import BenchmarkConfig, build_benchmark, run_benchmark
from pgqp.partition import scheme_metrics


def main() -> None:
    config = BenchmarkConfig()
    if len(sys.argv) > 1:
        config = replace(config, random_seeds=int(sys.argv[1]))
    bench = build_benchmark(config)
    m = scheme_metrics(bench.parts, "bench")
    print(f"{len(bench.graph.vertices)} vertices, {len(bench.graph.edges)} edges, "
          f"partition sizes {[len(p.local_vids) for p in bench.parts]}, total_cc {m.total_cc}")
    report = run_benchmark(bench)
    print(report.to_tsv())
    print(report.summary())


if __name__ == "__main__":
    main()
