"""Partitioned graph query processing.

Graphs too large for memory are split into partitions extended by their
one-edge cut set, and a query is answered by loading partitions one at a
time (or a few at a time) while bookkeeping files record where matching
must continue.
"""

from __future__ import annotations

from .benchmark import BenchmarkConfig, build_benchmark, run_benchmark
from .bookkeeping import Bookkeeping, FAAStore, IMAStore, RunLog, SNIEntry, SNITable
from .campaign import CampaignReport, run_campaign
from .graph import Catalog, Edge, Graph, Vertex, build_catalog, parse_graph, read_graph, serialize_graph
from .matching import Answer, PartialAnswer, Seed, expand_in_partition, oracle_match, step_in_partition
from .opat import choose_next, compute_l_ideal, init_sni, load_ratio_measures, run_opat
from .parallel import map_task, reduce_task, run_mapreduce_mp, run_traditional_mp, shuffle_group
from .partition import (ExtendedPartition, PartitionAssignment, PartitionDirectory, choose_scheme,
                        extend_with_cutset, import_assignment, partition_builtin, save_partitions,
                        scheme_metrics)
from .planner import QueryPlan, generate_plan
from .query import Query, QueryGraph, parse_query, read_query
from .synthetic import generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "Answer", "BenchmarkConfig", "Bookkeeping", "CampaignReport", "Catalog", "Edge", "ExtendedPartition", "FAAStore",
    "Graph", "IMAStore", "PartialAnswer", "PartitionAssignment", "PartitionDirectory", "Query",
    "QueryGraph", "QueryPlan", "RunLog", "SNIEntry", "SNITable", "Seed", "Vertex", "build_benchmark",
    "build_catalog",
    "choose_next", "choose_scheme", "compute_l_ideal", "expand_in_partition", "extend_with_cutset",
    "generate_plan", "generate_synthetic", "import_assignment", "init_sni", "load_ratio_measures",
    "map_task", "oracle_match", "parse_graph", "parse_query", "partition_builtin", "read_graph",
    "read_query", "reduce_task", "run_benchmark", "run_campaign", "run_mapreduce_mp", "run_opat", "run_traditional_mp",
    "save_partitions", "scheme_metrics", "serialize_graph", "shuffle_group", "step_in_partition",
]
