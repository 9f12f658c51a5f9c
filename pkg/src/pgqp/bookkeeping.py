"""SNI / IMA / FAA stores and the run log, optionally mirrored to a run directory.

Run directory layout (all text, UTF-8, ``\\n`` line ends):

``sni.tsv``
    current starting-node table; header then one row per entry:
    ``pid qnode label vid ima_ref count stamp`` (tab separated). ``qnode`` is
    ``<disjunct>.<qnode id>``; ``vid`` and ``ima_ref`` are ``NULL`` for
    start entries, whose ``label`` is the start predicate token and whose
    ``count`` is the number of matching local vertices. ``stamp`` is the
    iteration that created the entry (0 = initial).
``sni_history.tsv``
    the table as it stood before each iteration, rows prefixed by the
    iteration number.
``ima_<pid>.jsonl``
    append-only partial answers waiting for partition ``pid``, one JSON
    object per line with keys in the order
    ``id pid disjunct entry bindings checked stamp``; ``entry`` is
    ``[vid, label, qnode]`` and ``bindings`` is ``[[qnode, vid, pid, label], ...]``.
``faa.txt``
    one answer per line, ``qnode=vid@pid`` pairs sorted by qnode.
``runlog.tsv``
    ``key<TAB>value`` summary followed by one ``load`` row per partition
    load. Contains no timings, so identical runs give identical files.
``iterations.tsv``
    ``iteration required chosen wall_ms`` per iteration.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .graph import quote_label
from .matching import Answer, Continuation, PartialAnswer, format_answer

__all__ = [
    "SNIEntry",
    "SNITable",
    "IMARecord",
    "IMAStore",
    "FAAStore",
    "IterationStats",
    "RunLog",
    "Bookkeeping",
    "BookkeepingError",
]

NULL = "NULL"


class BookkeepingError(RuntimeError):
    """Internal inconsistency between SNI, IMA and FAA (an implementation bug)."""


@dataclass
class SNIEntry:
    pid: int
    disjunct: int
    qnode: int
    label: str
    vid: int | None = None
    ima_ref: int | None = None
    count: int = 1
    stamp: int = 0

    def __post_init__(self):
        if (self.vid is None) != (self.ima_ref is None):
            raise BookkeepingError("an SNI entry has a vertex id exactly when it has an IMA reference")

    @property
    def is_start(self) -> bool:
        return self.vid is None

    def row(self) -> str:
        return "\t".join([
            str(self.pid), f"{self.disjunct}.{self.qnode}", self.label if self.is_start else quote_label(self.label),
            NULL if self.vid is None else str(self.vid),
            NULL if self.ima_ref is None else str(self.ima_ref),
            str(self.count), str(self.stamp),
        ])


SNI_HEADER = "pid\tqnode\tlabel\tvid\tima_ref\tcount\tstamp"


class SNITable:
    def __init__(self, entries: list[SNIEntry] | None = None):
        self.entries: list[SNIEntry] = list(entries or [])

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def counts(self) -> dict[int, int]:
        """Start-node count per eligible partition (a label entry counts its occurrences)."""
        out: dict[int, int] = {}
        for e in self.entries:
            out[e.pid] = out.get(e.pid, 0) + e.count
        return out

    def eligible(self) -> list[int]:
        return sorted({e.pid for e in self.entries})

    def for_pid(self, pid: int) -> list[SNIEntry]:
        return [e for e in self.entries if e.pid == pid]

    def take(self, pids) -> dict[int, list[SNIEntry]]:
        """Remove and return the entries of the given partitions."""
        pids = set(pids)
        taken: dict[int, list[SNIEntry]] = {pid: [] for pid in pids}
        keep = []
        for e in self.entries:
            if e.pid in pids:
                taken[e.pid].append(e)
            else:
                keep.append(e)
        self.entries = keep
        return taken

    def add(self, entries) -> None:
        self.entries.extend(entries)

    def dumps(self) -> str:
        return SNI_HEADER + "\n" + "".join(e.row() + "\n" for e in self.entries)


@dataclass
class IMARecord:
    id: int
    pid: int
    partial: PartialAnswer
    entry_vid: int
    entry_label: str
    entry_qnode: int
    stamp: int

    def to_json(self) -> str:
        obj = {
            "id": self.id,
            "pid": self.pid,
            "disjunct": self.partial.disjunct,
            "entry": [self.entry_vid, self.entry_label, self.entry_qnode],
            "bindings": [list(b) for b in self.partial.bindings],
            "checked": sorted(self.partial.checked),
            "stamp": self.stamp,
        }
        return json.dumps(obj, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "IMARecord":
        o = json.loads(line)
        pa = PartialAnswer(o["disjunct"], tuple(tuple(b) for b in o["bindings"]), frozenset(o["checked"]))
        vid, label, q = o["entry"]
        return cls(o["id"], o["pid"], pa, vid, label, q, o["stamp"])


class IMAStore:
    """Per-partition append-only partial answers; pending records are indexed by id."""

    def __init__(self, run_dir: Path | None = None):
        self.run_dir = run_dir
        self.pending: dict[int, IMARecord] = {}
        self.appended: dict[int, int] = {}
        self._next = 1

    def append(self, pid: int, c: Continuation, stamp: int) -> IMARecord:
        rec = IMARecord(self._next, pid, c.partial, c.entry_vid, c.entry_label, c.entry_qnode, stamp)
        self._next += 1
        self.pending[rec.id] = rec
        self.appended[pid] = self.appended.get(pid, 0) + 1
        if self.run_dir is not None:
            with open(self.run_dir / f"ima_{pid}.jsonl", "a", encoding="utf-8") as fh:
                fh.write(rec.to_json() + "\n")
        return rec

    def take(self, ref: int) -> IMARecord:
        try:
            return self.pending.pop(ref)
        except KeyError:
            raise BookkeepingError(f"SNI refers to IMA record {ref} which does not exist or was consumed") from None


class FAAStore:
    def __init__(self, run_dir: Path | None = None):
        self.run_dir = run_dir
        self.answers: list[Answer] = []
        self.keys: set = set()

    def __len__(self) -> int:
        return len(self.answers)

    def add(self, a: Answer) -> bool:
        if a.key in self.keys:
            return False
        self.keys.add(a.key)
        self.answers.append(a)
        if self.run_dir is not None:
            with open(self.run_dir / "faa.txt", "a", encoding="utf-8") as fh:
                fh.write(format_answer(a) + "\n")
        return True

    def key_set(self) -> set:
        return set(self.keys)


@dataclass
class IterationStats:
    index: int
    required: int
    chosen: list[int]
    wall_ms: float = 0.0
    expansions: dict[int, int] = field(default_factory=dict)
    max_stamp_seen: int = -1


@dataclass
class RunLog:
    mode: str
    heuristic: str
    seed: int
    scheme: str = "unnamed"
    load_sequence: list[int] = field(default_factory=list)
    l_ideal: int = 0
    sni_snapshots: list[dict[int, int]] = field(default_factory=list)
    load_wall_ms: list[float] = field(default_factory=list)
    iterations: list[IterationStats] = field(default_factory=list)
    answers: int = 0
    completed: bool = False
    workers: int = 1
    partition_sizes: dict[int, tuple[int, int]] = field(default_factory=dict)

    @property
    def AL(self) -> int:
        return len(self.load_sequence)

    @property
    def num_iterations(self) -> int:
        return len(self.iterations)

    @property
    def ratio(self) -> float | None:
        return self.l_ideal / self.AL if self.AL else None

    def dumps(self) -> str:
        ratio = self.ratio
        rows = [
            ("mode", self.mode),
            ("heuristic", self.heuristic),
            ("seed", str(self.seed)),
            ("scheme", self.scheme),
            ("workers", str(self.workers)),
            ("load_sequence", ",".join(map(str, self.load_sequence))),
            ("AL", str(self.AL)),
            ("L_ideal", str(self.l_ideal)),
            ("ratio", "NA" if ratio is None else f"{ratio:.6f}"),
            ("iterations", str(self.num_iterations)),
            ("answers", str(self.answers)),
            ("completed", "1" if self.completed else "0"),
        ]
        out = ["key\tvalue"] + [f"{k}\t{v}" for k, v in rows]
        pos = 0
        for it in self.iterations:
            for pid in it.chosen:
                out.append(f"load\t{pos + 1}\t{it.index}\t{pid}")
                pos += 1
        for i, snap in enumerate(self.sni_snapshots, start=1):
            out.append("sni\t%d\t%s" % (i, ",".join(f"{p}:{c}" for p, c in sorted(snap.items()))))
        return "\n".join(out) + "\n"


class Bookkeeping:
    """The three stores plus the optional run directory they are mirrored to."""

    def __init__(self, run_dir: str | os.PathLike | None = None):
        self.run_dir = Path(run_dir) if run_dir is not None else None
        if self.run_dir is not None:
            self.run_dir.mkdir(parents=True, exist_ok=True)
            for f in self.run_dir.iterdir():
                if f.name in ("sni.tsv", "sni_history.tsv", "faa.txt", "runlog.tsv", "iterations.tsv") \
                        or (f.name.startswith("ima_") and f.name.endswith(".jsonl")):
                    f.unlink()
            (self.run_dir / "faa.txt").touch()
        self.sni = SNITable()
        self.ima = IMAStore(self.run_dir)
        self.faa = FAAStore(self.run_dir)

    def write_sni(self, iteration: int | None = None) -> None:
        if self.run_dir is None:
            return
        text = self.sni.dumps()
        with open(self.run_dir / "sni.tsv", "w", encoding="utf-8") as fh:
            fh.write(text)
        if iteration is not None:
            path = self.run_dir / "sni_history.tsv"
            new = not path.exists()
            with open(path, "a", encoding="utf-8") as fh:
                if new:
                    fh.write("iteration\t" + SNI_HEADER + "\n")
                for e in self.sni.entries:
                    fh.write(f"{iteration}\t{e.row()}\n")

    def write_log(self, log: RunLog) -> None:
        if self.run_dir is None:
            return
        with open(self.run_dir / "runlog.tsv", "w", encoding="utf-8") as fh:
            fh.write(log.dumps())
        with open(self.run_dir / "iterations.tsv", "w", encoding="utf-8") as fh:
            fh.write("iteration\trequired\tchosen\twall_ms\n")
            for it in log.iterations:
                fh.write(f"{it.index}\t{it.required}\t{','.join(map(str, it.chosen))}\t{it.wall_ms:.3f}\n")
