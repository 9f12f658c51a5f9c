"""The committed heuristic-comparison benchmark: a seeded synthetic graph, its 4-way split and ten queries."""

from __future__ import annotations

from dataclasses import dataclass
from importlib.resources import files

from .campaign import CampaignReport, run_campaign
from .graph import Catalog, Graph, build_catalog, parse_graph
from .opat import HEURISTICS
from .partition import ExtendedPartition, extend_with_cutset, partition_builtin
from .query import Query, parse_query
from .synthetic import generate_synthetic

__all__ = ["BenchmarkConfig", "Benchmark", "BENCH_QUERIES", "build_benchmark", "run_benchmark"]

# the template is sA -t1-> sB -t2-> sC -t3-> sD -t4-> sE plus sA -t5-> sE
BENCH_QUERIES = {
    "p1": "qv 1 sA\nqv 2 sB\nqe 1 2 d t1\n",
    "p2": "qv 1 sB\nqv 2 sC\nqv 3 sD\nqe 1 2 d t2\nqe 2 3 d t3\n",
    "p3": "qv 1 sC\nqv 2 sD\nqv 3 sE\nqe 1 2 d t3\nqe 2 3 d t4\n",
    "p4": "qv 1 sA\nqv 2 sE\nqv 3 sD\nqe 1 2 d t5\nqe 3 2 d t4\n",
    "p5": "qv 1 sA\nqv 2 ?\nqe 1 2 d ?\n",
    "p6": "qv 1 sE\nqv 2 ?\nqv 3 ?\nqe 2 1 d ?\nqe 3 2 d ?\n",
    "p7": "qv 1 sB\nqv 2 sC\nqv 3 ?\nqe 1 2 d t2\nqe 2 3 d ?\n",
}
PACKAGED_QUERIES = ("q4", "q5", "q6")


@dataclass(frozen=True)
class BenchmarkConfig:
    nv: int = 10_000
    ne: int = 30_000
    vlabels: int = 200
    elabels: int = 40
    embed_count: int = 20
    graph_seed: int = 7
    locality: float = 0.9
    window: int = 32
    k: int = 4
    partition_seed: int = 0
    random_seeds: int = 50


@dataclass
class Benchmark:
    config: BenchmarkConfig
    graph: Graph
    parts: list[ExtendedPartition]
    queries: dict[str, Query]
    catalog: Catalog


def _data(name: str) -> str:
    return (files("pgqp") / "data" / name).read_text(encoding="utf-8")


def build_benchmark(config: BenchmarkConfig = BenchmarkConfig()) -> Benchmark:
    template = parse_graph(_data("template.g"))
    g = generate_synthetic(config.nv, config.ne, config.vlabels, config.elabels, template, config.embed_count,
                           seed=config.graph_seed, locality=config.locality, window=config.window, spread=True)
    a = partition_builtin(g, config.k, config.partition_seed, "bench")
    queries = {n: parse_query(_data(f"{n}.q")) for n in PACKAGED_QUERIES}
    queries.update({n: parse_query(t) for n, t in BENCH_QUERIES.items()})
    return Benchmark(config, g, extend_with_cutset(g, a), queries, build_catalog(g))


def run_benchmark(bench: Benchmark, heuristics=HEURISTICS) -> CampaignReport:
    return run_campaign(bench.queries, {"bench": bench.parts}, bench.catalog, heuristics,
                        random_seeds=bench.config.random_seeds)
