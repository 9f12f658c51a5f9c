"""Iteration-parallel executors: a p-worker pool with a barrier, and a map/shuffle/reduce dataflow.

Both share the SNI/IMA/FAA stores with the sequential driver. Within one
iteration the tasks only read the partition data, the plans and the SNI
entries taken for them; everything they produce is merged by the driver
after all tasks have finished.

MapRecord text form (one JSON object, keys in this order)::

    {"key": <pid or "COMPLETE">, "disjunct": d, "entry": [vid, label, qnode],
     "bindings": [[qnode, vid, pid, label], ...], "checked": [...]}

Complete answers carry ``[qnode, vid, pid]`` bindings, an empty ``checked``
list and ``entry`` ``[0, "", 0]``.
"""

from __future__ import annotations

import json
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .bookkeeping import Bookkeeping, IterationStats, RunLog, SNIEntry
from .graph import Catalog
from .matching import Answer, Continuation, PartialAnswer, Seed, step_in_partition
from .opat import (add_answers, finish_log, init_sni, make_plans, normalize_heuristic,
                   rank_partitions, record_continuations, seeds_for, work_partition)
from .partition import ExtendedPartition, PartitionSet, as_partition_set
from .planner import QueryPlan
from .query import Query

__all__ = [
    "COMPLETE",
    "MapRecord",
    "map_task",
    "shuffle_group",
    "reduce_task",
    "run_traditional_mp",
    "run_mapreduce_mp",
]

COMPLETE = "COMPLETE"

MergeOrder = Callable[[list[int]], list[int]]


def _chosen(counts: dict[int, int], heuristic: str, rng: random.Random, slots: int) -> list[int]:
    return rank_partitions(counts, heuristic, rng, slots)


# --------------------------------------------------------------------------
# traditional p-worker execution
# --------------------------------------------------------------------------


def run_traditional_mp(parts: PartitionSet | Sequence[ExtendedPartition], query: Query, catalog: Catalog,
                       heuristic: str = "max-sn", p: int = 2, seed: int = 0, limit: int | None = None,
                       run_dir=None, plans: Sequence[QueryPlan] | None = None,
                       merge_order: MergeOrder | None = None) -> tuple[Bookkeeping, RunLog]:
    """Load up to ``p`` partitions per iteration and expand them concurrently.

    After the barrier the workers' answers and continuations are merged in
    the order the partitions were chosen, or in ``merge_order(chosen)`` when
    given (used to check that the order does not matter).
    """
    if p < 1:
        raise ValueError(f"need at least one worker, got p={p}")
    ps = as_partition_set(parts)
    h = normalize_heuristic(heuristic)
    plans = list(plans) if plans is not None else make_plans(query, catalog)
    limit = limit if limit is not None else query.limit
    rng = random.Random(seed)
    books = Bookkeeping(run_dir)
    books.sni = init_sni(ps, plans)
    log = RunLog("trad", h, seed, ps.scheme_name, workers=p)

    def task(pid: int, seeds):
        t0 = time.perf_counter()
        part = ps.load(pid)
        answers, conts = work_partition(part, plans, seeds)
        return answers, conts, (time.perf_counter() - t0) * 1000

    i = 0
    done = limit is not None and len(books.faa) >= limit
    with ThreadPoolExecutor(max_workers=p) as pool:
        while books.sni and not done:
            i += 1
            books.write_sni(i)
            counts = books.sni.counts()
            log.sni_snapshots.append(counts)
            chosen = _chosen(counts, h, rng, p)
            t0 = time.perf_counter()
            taken = books.sni.take(chosen)
            stamp_seen = max((e.stamp for es in taken.values() for e in es), default=-1)
            futures = {pid: pool.submit(task, pid, seeds_for(taken[pid], books)) for pid in chosen}
            results = {pid: f.result() for pid, f in futures.items()}
            # barrier passed: nothing below is visible to this iteration's tasks
            order = merge_order(list(chosen)) if merge_order else chosen
            if sorted(order) != sorted(chosen):
                raise ValueError("merge order must be a permutation of the chosen partitions")
            for pid in order:
                answers, conts, ms = results[pid]
                if not done:
                    done = add_answers(books, answers, limit)
                record_continuations(books, conts, i)
            for pid in chosen:
                log.load_sequence.append(pid)
                log.load_wall_ms.append(results[pid][2])
            log.iterations.append(IterationStats(i, len(counts), list(chosen), (time.perf_counter() - t0) * 1000,
                                                 {pid: len(taken[pid]) for pid in chosen}, stamp_seen))
    finish_log(log, ps, plans, books)
    return books, log


# --------------------------------------------------------------------------
# map / shuffle / reduce
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MapRecord:
    key: int | str
    value: PartialAnswer | Answer
    entry_vid: int = 0
    entry_label: str = ""
    entry_qnode: int = 0

    def __post_init__(self):
        if (self.key == COMPLETE) != isinstance(self.value, Answer):
            raise ValueError("a record is keyed COMPLETE exactly when it carries a full answer")

    def dumps(self) -> str:
        v = self.value
        if isinstance(v, Answer):
            checked: list[int] = []
        else:
            checked = sorted(v.checked)
        obj = {
            "key": self.key,
            "disjunct": v.disjunct,
            "entry": [self.entry_vid, self.entry_label, self.entry_qnode],
            "bindings": [list(b) for b in v.bindings],
            "checked": checked,
        }
        return json.dumps(obj, separators=(",", ":"))

    @classmethod
    def loads(cls, line: str) -> "MapRecord":
        o = json.loads(line)
        vid, label, q = o["entry"]
        if o["key"] == COMPLETE:
            val = Answer(o["disjunct"], tuple(tuple(b) for b in o["bindings"]))
        else:
            val = PartialAnswer(o["disjunct"], tuple(tuple(b) for b in o["bindings"]), frozenset(o["checked"]))
        return cls(o["key"], val, vid, label, q)


def map_task(part: ExtendedPartition, seeds: Sequence[tuple[int, Seed]],
             plans: Sequence[QueryPlan]) -> list[MapRecord]:
    """Advance every seed of this partition by one plan edge."""
    out = []
    for d, seed in seeds:
        for target, value, vid, label, q in step_in_partition(part, plans[d], seed):
            out.append(MapRecord(COMPLETE if target is None else target, value, vid, label, q))
    return out


def _key_order(k) -> tuple[int, int]:
    return (1, 0) if k == COMPLETE else (0, k)


def shuffle_group(records: Sequence[MapRecord]) -> dict[int | str, list[MapRecord]]:
    """Group records by key; keys ascending with COMPLETE last, values by serialized form."""
    groups: dict[int | str, list[tuple[str, MapRecord]]] = {}
    for r in records:
        groups.setdefault(r.key, []).append((r.dumps(), r))
    return {k: [r for _, r in sorted(groups[k], key=lambda t: t[0])] for k in sorted(groups, key=_key_order)}


def reduce_task(key: int | str, values: Sequence[MapRecord]
                ) -> tuple[list[SNIEntry], list[Continuation], list[Answer]]:
    """One pass over a group.

    Returns ``(sni_delta, ima_delta, faa_delta)``. The ``ima_ref`` of each
    SNI entry in the delta is the index of its record in ``ima_delta``; the
    driver rewrites it to the store id when it appends the record.
    """
    sni: list[SNIEntry] = []
    ima: list[Continuation] = []
    faa: list[Answer] = []
    seen = set()
    for r in values:
        if key == COMPLETE:
            if r.value.key not in seen:
                seen.add(r.value.key)
                faa.append(r.value)
            continue
        ima.append(Continuation(r.value, key, r.entry_vid, r.entry_label, r.entry_qnode))
        sni.append(SNIEntry(key, r.value.disjunct, r.entry_qnode, r.entry_label, r.entry_vid, len(ima) - 1))
    return sni, ima, faa


def run_mapreduce_mp(parts: PartitionSet | Sequence[ExtendedPartition], query: Query, catalog: Catalog,
                     heuristic: str = "max-sn", m: int | None = None, seed: int = 0, limit: int | None = None,
                     run_dir=None, plans: Sequence[QueryPlan] | None = None,
                     merge_order: Callable[[list], list] | None = None) -> tuple[Bookkeeping, RunLog]:
    """Map/shuffle/reduce execution, one plan edge per iteration.

    Every eligible partition is mapped when ``m`` (mapper slots, default
    unlimited) covers them; otherwise the heuristic picks ``m``. Reducer
    outputs are merged in key order, or ``merge_order(keys)``.
    """
    if m is not None and m < 1:
        raise ValueError(f"need at least one mapper slot, got m={m}")
    ps = as_partition_set(parts)
    h = normalize_heuristic(heuristic)
    plans = list(plans) if plans is not None else make_plans(query, catalog)
    limit = limit if limit is not None else query.limit
    rng = random.Random(seed)
    books = Bookkeeping(run_dir)
    books.sni = init_sni(ps, plans)
    log = RunLog("mr", h, seed, ps.scheme_name, workers=m or 0)
    i = 0
    done = limit is not None and len(books.faa) >= limit
    while books.sni and not done:
        i += 1
        books.write_sni(i)
        counts = books.sni.counts()
        log.sni_snapshots.append(counts)
        if m is None or m >= len(counts):
            chosen = sorted(counts)
        else:
            chosen = _chosen(counts, h, rng, m)
        t0 = time.perf_counter()
        taken = books.sni.take(chosen)
        stamp_seen = max((e.stamp for es in taken.values() for e in es), default=-1)
        records: list[MapRecord] = []
        for pid in chosen:
            tl = time.perf_counter()
            records.extend(map_task(ps.load(pid), seeds_for(taken[pid], books), plans))
            log.load_sequence.append(pid)
            log.load_wall_ms.append((time.perf_counter() - tl) * 1000)
        groups = shuffle_group(records)
        reduced = {k: reduce_task(k, v) for k, v in groups.items()}
        keys = list(reduced)
        if merge_order:
            keys = merge_order(keys)
        for k in keys:
            sni_delta, ima_delta, faa_delta = reduced[k]
            if not done:
                done = add_answers(books, faa_delta, limit)
            ids = [books.ima.append(c.target_pid, c, i).id for c in ima_delta]
            for e in sni_delta:
                e.ima_ref = ids[e.ima_ref]
                e.stamp = i
            books.sni.add(sni_delta)
        log.iterations.append(IterationStats(i, len(counts), list(chosen), (time.perf_counter() - t0) * 1000,
                                             {pid: len(taken[pid]) for pid in chosen}, stamp_seen))
    finish_log(log, ps, plans, books)
    return books, log
