"""Heuristic-comparison campaigns over queries x partitioning schemes x heuristics."""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import fmean
from typing import Mapping, Sequence

from .graph import Catalog
from .opat import HEURISTICS, load_ratio_measures, run_opat
from .parallel import run_mapreduce_mp, run_traditional_mp
from .partition import PartitionSet, as_partition_set
from .query import Query

__all__ = ["CampaignRow", "CampaignReport", "CampaignError", "run_campaign", "ROW_HEADER"]

ROW_HEADER = "query\tscheme\theuristic\tseeds\tAL\tL_ideal\tratio\titerations\tanswers"


@dataclass
class CampaignRow:
    query: str
    scheme: str
    heuristic: str
    seeds: int
    AL: float
    L_ideal: float
    ratio: float
    iterations: float
    answers: int

    def dumps(self) -> str:
        return "\t".join([self.query, self.scheme, self.heuristic, str(self.seeds), f"{self.AL:.6f}",
                          f"{self.L_ideal:.6f}", f"{self.ratio:.12f}", f"{self.iterations:.6f}", str(self.answers)])


@dataclass
class CampaignReport:
    rows: list[CampaignRow] = field(default_factory=list)

    def measures(self, heuristic: str) -> dict[str, dict[str, float]]:
        """Per-query (mean over schemes) and per-scheme (mean over queries) load ratios."""
        rs = {(r.query, r.scheme): r.ratio for r in self.rows if r.heuristic == heuristic}
        return load_ratio_measures(rs) if rs else {"per_query": {}, "per_scheme": {}}

    def mean_ratio(self, heuristic: str) -> float:
        return fmean(r.ratio for r in self.rows if r.heuristic == heuristic)

    def heuristics(self) -> list[str]:
        return [h for h in HEURISTICS if any(r.heuristic == h for r in self.rows)]

    def to_tsv(self) -> str:
        return ROW_HEADER + "\n" + "".join(r.dumps() + "\n" for r in self.rows)

    def summary(self) -> str:
        """Tables of load-ratio means: one row per query and one per scheme, one column per heuristic."""
        hs = self.heuristics()
        ms = {h: self.measures(h) for h in hs}
        out = ["# per query (mean over schemes)", "query\t" + "\t".join(hs)]
        for q in sorted({r.query for r in self.rows}):
            out.append(q + "\t" + "\t".join(_fmt(ms[h]["per_query"].get(q)) for h in hs))
        out += ["", "# per scheme (mean over queries)", "scheme\t" + "\t".join(hs)]
        for s in sorted({r.scheme for r in self.rows}):
            out.append(s + "\t" + "\t".join(_fmt(ms[h]["per_scheme"].get(s)) for h in hs))
        out += ["", "# overall", "\t".join(hs), "\t".join(_fmt(self.mean_ratio(h)) for h in hs)]
        return "\n".join(out) + "\n"


def _fmt(x: float | None) -> str:
    return "NA" if x is None else f"{x:.4f}"


class CampaignError(RuntimeError):
    """A run failed; ``report`` holds the rows finished before it."""

    def __init__(self, message: str, report: CampaignReport):
        super().__init__(message)
        self.report = report


def _run(mode: str, ps, query, catalog, h, seed, slots):
    if mode == "opat":
        return run_opat(ps, query, catalog, h, seed)
    if mode == "trad":
        return run_traditional_mp(ps, query, catalog, h, p=slots or 1, seed=seed)
    if mode == "mr":
        return run_mapreduce_mp(ps, query, catalog, h, m=slots, seed=seed)
    raise ValueError(f"unknown mode {mode!r}")


def run_campaign(queries: Mapping[str, Query], schemes: Mapping[str, PartitionSet | Sequence],
                 catalog: Catalog, heuristics: Sequence[str] = HEURISTICS, random_seeds: int = 10,
                 seed: int = 0, mode: str = "opat", slots: int | None = None) -> CampaignReport:
    """Run every (query, scheme, heuristic) combination.

    ``random-sn`` rows average AL, L_ideal, ratio and iteration counts over
    ``random_seeds`` seeds starting at ``seed``; the other heuristics run
    once with ``seed`` (it only breaks count ties). Answer counts must agree
    across seeds.
    """
    report = CampaignReport()
    sets = {name: as_partition_set(p) for name, p in schemes.items()}
    for qname, query in queries.items():
        for sname, ps in sets.items():
            for h in heuristics:
                n = random_seeds if h == "random-sn" else 1
                try:
                    logs = [_run(mode, ps, query, catalog, h, seed + i, slots)[1] for i in range(n)]
                except Exception as exc:
                    raise CampaignError(f"{qname}/{sname}/{h} failed: {exc}", report) from exc
                answers = {log.answers for log in logs}
                if len(answers) != 1:
                    raise CampaignError(f"{qname}/{sname}/{h}: answer counts differ across seeds", report)
                if any(log.AL == 0 for log in logs):
                    raise CampaignError(f"{qname}/{sname}/{h}: no partition was loaded", report)
                report.rows.append(CampaignRow(
                    qname, sname, h, n,
                    fmean(log.AL for log in logs),
                    fmean(log.l_ideal for log in logs),
                    fmean(log.l_ideal / log.AL for log in logs),
                    fmean(log.num_iterations for log in logs),
                    answers.pop(),
                ))
    return report
