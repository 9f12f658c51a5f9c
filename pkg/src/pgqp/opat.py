"""One-partition-at-a-time query driver, partition-choice heuristics and load-ratio measures."""

from __future__ import annotations

import random
import time
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from .bookkeeping import Bookkeeping, RunLog, IterationStats, SNIEntry, SNITable
from .graph import Catalog
from .matching import Answer, Continuation, ExpansionStats, Seed, expand_in_partition
from .partition import ExtendedPartition, PartitionSet, as_partition_set
from .planner import QueryPlan, generate_plan
from .query import Query

__all__ = [
    "HEURISTICS",
    "normalize_heuristic",
    "make_plans",
    "init_sni",
    "compute_l_ideal",
    "rank_partitions",
    "choose_next",
    "run_opat",
    "load_ratio",
    "load_ratio_measures",
    "LoadRatioError",
]

HEURISTICS = ("max-sn", "min-sn", "random-sn")


class LoadRatioError(ValueError):
    """A load ratio above 1: the ideal load count was not a lower bound."""


def normalize_heuristic(h: str) -> str:
    h = h.lower()
    if h not in HEURISTICS:
        raise ValueError(f"unknown heuristic {h!r}; expected one of {', '.join(HEURISTICS)}")
    return h


def make_plans(query: Query, catalog: Catalog) -> list[QueryPlan]:
    return [generate_plan(qg, catalog, disjunct=i) for i, qg in enumerate(query.disjuncts)]


def init_sni(parts: PartitionSet | Sequence[ExtendedPartition], plans: Sequence[QueryPlan]) -> SNITable:
    """One start entry per (partition, plan) whose start predicate matches local vertices."""
    ps = as_partition_set(parts)
    sni = SNITable()
    for pid in ps.pids:
        counts = ps.label_counts(pid)
        for plan in plans:
            pred = plan.start_pred
            n = sum(c for label, c in counts.items() if pred.matches(label))
            if n:
                sni.add([SNIEntry(pid, plan.disjunct, plan.start, pred.token(), count=n)])
    return sni


def compute_l_ideal(parts: PartitionSet | Sequence[ExtendedPartition], plans: Sequence[QueryPlan],
                    answers: Iterable[Answer] = ()) -> int:
    """Lower bound on partition loads.

    Every partition holding a start-node candidate must be loaded, and so
    must the home partition of every answer vertex bound to an inner plan
    node, since that node's outgoing plan edges can only be expanded where
    its full adjacency lives.
    """
    ps = as_partition_set(parts)
    needed = set()
    for pid in ps.pids:
        counts = ps.label_counts(pid)
        if any(plan.start_pred.matches(label) for plan in plans for label in counts):
            needed.add(pid)
    inner = {plan.disjunct: set(plan.query_graph.nodes) - plan.leaves() for plan in plans}
    for a in answers:
        keep = inner[a.disjunct]
        needed.update(pid for q, _, pid in a.bindings if q in keep)
    return len(needed)


def rank_partitions(counts: Mapping[int, int], heuristic: str, rng: random.Random, n: int = 1) -> list[int]:
    """Pick up to ``n`` partitions from the eligible ones.

    ``max-sn`` takes the largest start-node counts, ``min-sn`` the smallest,
    both breaking ties uniformly at random; ``random-sn`` ignores counts.
    """
    h = normalize_heuristic(heuristic)
    pids = sorted(counts)
    if not pids:
        raise ValueError("no eligible partitions")
    n = min(n, len(pids))
    if h == "random-sn":
        return rng.sample(pids, n)
    sign = -1 if h == "max-sn" else 1
    ties = {pid: rng.random() for pid in pids}
    return sorted(pids, key=lambda p: (sign * counts[p], ties[p]))[:n]


def choose_next(sni: SNITable, heuristic: str, rng: random.Random) -> int:
    if not sni:
        raise ValueError("SNI table is empty; nothing left to load")
    return rank_partitions(sni.counts(), heuristic, rng, 1)[0]


def seeds_for(entries: Sequence[SNIEntry], books: Bookkeeping) -> list[tuple[int, Seed]]:
    """Turn SNI entries into ``(disjunct, seed)`` pairs, consuming their IMA records."""
    out = []
    for e in entries:
        if e.is_start:
            out.append((e.disjunct, Seed()))
        else:
            rec = books.ima.take(e.ima_ref)
            out.append((e.disjunct, Seed(vid=e.vid, partial=rec.partial)))
    return out


def work_partition(part: ExtendedPartition, plans: Sequence[QueryPlan],
                   seeds: Sequence[tuple[int, Seed]], stats: ExpansionStats | None = None
                   ) -> tuple[list[Answer], list[Continuation]]:
    answers: list[Answer] = []
    conts: list[Continuation] = []
    for d, seed in seeds:
        a, c = expand_in_partition(part, plans[d], [seed], stats)
        answers.extend(a)
        conts.extend(c)
    return answers, conts


def record_continuations(books: Bookkeeping, conts: Iterable[Continuation], stamp: int) -> None:
    new = []
    for c in conts:
        rec = books.ima.append(c.target_pid, c, stamp)
        new.append(SNIEntry(c.target_pid, c.partial.disjunct, c.entry_qnode, c.entry_label,
                            c.entry_vid, rec.id, 1, stamp))
    books.sni.add(new)


def add_answers(books: Bookkeeping, answers: Iterable[Answer], limit: int | None) -> bool:
    """Append to FAA; True once the limit is reached."""
    for a in answers:
        if limit is not None and len(books.faa) >= limit:
            return True
        books.faa.add(a)
    return limit is not None and len(books.faa) >= limit


def finish_log(log: RunLog, parts: PartitionSet, plans, books: Bookkeeping) -> None:
    log.answers = len(books.faa)
    log.completed = not books.sni
    log.l_ideal = compute_l_ideal(parts, plans, books.faa.answers)
    log.partition_sizes = {pid: parts.sizes(pid) for pid in parts.pids}
    books.write_sni()
    books.write_log(log)


def run_opat(parts: PartitionSet | Sequence[ExtendedPartition], query: Query, catalog: Catalog,
             heuristic: str = "max-sn", seed: int = 0, limit: int | None = None,
             run_dir=None, plans: Sequence[QueryPlan] | None = None) -> tuple[Bookkeeping, RunLog]:
    """Answer ``query`` loading exactly one partition per step.

    Each load processes every SNI entry of the chosen partition, appends
    complete answers to FAA and turns continuations into IMA records plus
    SNI entries for their target partitions. The run ends when the SNI
    table is empty or ``limit`` answers have been found (``limit`` defaults
    to the query's own).
    """
    ps = as_partition_set(parts)
    h = normalize_heuristic(heuristic)
    plans = list(plans) if plans is not None else make_plans(query, catalog)
    limit = limit if limit is not None else query.limit
    rng = random.Random(seed)
    books = Bookkeeping(run_dir)
    books.sni = init_sni(ps, plans)
    log = RunLog("opat", h, seed, ps.scheme_name)
    step = 0
    done = limit is not None and len(books.faa) >= limit
    while books.sni and not done:
        step += 1
        books.write_sni(step)
        counts = books.sni.counts()
        log.sni_snapshots.append(counts)
        pid = choose_next(books.sni, h, rng)
        t0 = time.perf_counter()
        entries = books.sni.take([pid])[pid]
        part = ps.load(pid)
        answers, conts = work_partition(part, plans, seeds_for(entries, books))
        del part
        done = add_answers(books, answers, limit)
        record_continuations(books, conts, step)
        ms = (time.perf_counter() - t0) * 1000
        log.load_sequence.append(pid)
        log.load_wall_ms.append(ms)
        log.iterations.append(IterationStats(step, len(counts), [pid], ms, {pid: len(entries)},
                                             max((e.stamp for e in entries), default=-1)))
    finish_log(log, ps, plans, books)
    return books, log


def load_ratio(log: RunLog) -> float:
    if log.AL < 1:
        raise ValueError("load ratio needs at least one partition load")
    r = log.l_ideal / log.AL
    if r > 1:
        raise LoadRatioError(f"L_ideal={log.l_ideal} exceeds AL={log.AL}")
    return r


def load_ratio_measures(logs: Mapping[tuple[str, str], RunLog | float]) -> dict[str, dict[str, float]]:
    """Average load ratios keyed by ``(query, scheme)``.

    Values may be run logs or already computed ratios. Returns
    ``{"per_query": {query: mean over schemes}, "per_scheme": {scheme: mean over queries}}``.
    """
    ratios: dict[tuple[str, str], float] = {}
    for key, v in logs.items():
        r = load_ratio(v) if isinstance(v, RunLog) else float(v)
        if r > 1:
            raise LoadRatioError(f"load ratio {r} > 1 for {key}")
        ratios[key] = r
    queries = sorted({q for q, _ in ratios})
    schemes = sorted({s for _, s in ratios})
    return {
        "per_query": {q: fmean(r for (qq, _), r in ratios.items() if qq == q) for q in queries},
        "per_scheme": {s: fmean(r for (_, ss), r in ratios.items() if ss == s) for s in schemes},
    }
