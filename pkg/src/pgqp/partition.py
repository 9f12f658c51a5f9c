"""Partition assignments, one-edge cut-set extension and scheme metrics.

An extended partition holds its home (local) vertices and edges plus a
replica of every cut edge touching it, together with the far endpoint of
each such edge stored under its *home* partition id. That is enough to tell,
without loading anything else, where a match that leaves the partition must
resume.
"""

from __future__ import annotations

import heapq
import json
import os
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TextIO

from .graph import (
    Edge,
    Graph,
    GraphParseError,
    Vertex,
    build_catalog,
    connected_components,
    format_edge,
    format_vertex,
    iter_records,
    parse_record,
)

__all__ = [
    "PartitionAssignment",
    "AssignmentError",
    "ExtendedPartition",
    "SchemeMetrics",
    "PartitionSet",
    "InMemoryPartitions",
    "PartitionDirectory",
    "import_assignment",
    "format_assignment",
    "partition_builtin",
    "random_assignment",
    "extend_with_cutset",
    "reconstruct_graph",
    "scheme_metrics",
    "choose_scheme",
    "write_partition",
    "read_partition",
    "save_partitions",
    "as_partition_set",
]

CUTSET_MARKER = "# cutset"


class AssignmentError(ValueError):
    pass


@dataclass(frozen=True)
class PartitionAssignment:
    k: int
    map: dict[int, int]
    scheme_name: str = "unnamed"

    def __post_init__(self):
        if self.k < 1:
            raise AssignmentError(f"k must be >= 1, got {self.k}")
        bad = [pid for pid in self.map.values() if not 1 <= pid <= self.k]
        if bad:
            raise AssignmentError(f"partition ids out of range 1..{self.k}: {sorted(set(bad))[:5]}")

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {pid: [] for pid in range(1, self.k + 1)}
        for vid in sorted(self.map):
            out[self.map[vid]].append(vid)
        return out

    def sizes(self) -> list[int]:
        c = Counter(self.map.values())
        return [c.get(pid, 0) for pid in range(1, self.k + 1)]

    def cut_size(self, g: Graph) -> int:
        m = self.map
        return sum(1 for e in g.edges if m[e.src] != m[e.dst])


def import_assignment(g: Graph, lines: str | Iterable[str], k: int,
                      scheme_name: str = "imported") -> PartitionAssignment:
    """Read a METIS-style assignment: line i is the 0-based part of the i-th vid in ascending order."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    values: list[int] = []
    for lineno, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s or s.startswith("%") or s.startswith("#"):
            continue
        try:
            x = int(s)
        except ValueError:
            raise GraphParseError(lineno, f"expected an integer partition id, got {s!r}") from None
        if not 0 <= x < k:
            raise AssignmentError(f"line {lineno}: partition id {x} outside 0..{k - 1}")
        values.append(x)
    vids = sorted(g.vertices)
    if len(values) != len(vids):
        raise AssignmentError(f"assignment has {len(values)} entries but graph has {len(vids)} vertices")
    return PartitionAssignment(k, {vid: x + 1 for vid, x in zip(vids, values)}, scheme_name)


def format_assignment(a: PartitionAssignment) -> str:
    return "".join(f"{a.map[vid] - 1}\n" for vid in sorted(a.map))


def random_assignment(g: Graph, k: int, seed: int, scheme_name: str | None = None) -> PartitionAssignment:
    rng = random.Random(seed)
    return PartitionAssignment(k, {vid: rng.randint(1, k) for vid in sorted(g.vertices)},
                               scheme_name or f"random-{seed}")


def _bfs_dist(g: Graph, sources: Iterable[int]) -> dict[int, int]:
    dist = {s: 0 for s in sources}
    q = deque(dist)
    adj = g.adjacency
    while q:
        u = q.popleft()
        du = dist[u] + 1
        for _, w in adj[u]:
            if w not in dist:
                dist[w] = du
                q.append(w)
    return dist


def _farthest(g: Graph, dist: dict[int, int], candidates: Sequence[int]) -> int:
    # unreachable vertices (other components) count as infinitely far
    best, best_d = None, -1
    inf = len(g.vertices) + 1
    for vid in candidates:
        d = dist.get(vid, inf)
        if d > best_d:
            best, best_d = vid, d
    return best


def partition_builtin(g: Graph, k: int, seed: int = 0,
                      scheme_name: str = "builtin-greedy") -> PartitionAssignment:
    """Seeded multi-source greedy growth.

    Seeds are spread out by repeated farthest-vertex selection starting from
    a pseudo-peripheral vertex. The smallest partition grows next, each time
    absorbing the frontier vertex with the most edges into it (fewest new
    cut edges). A partition that runs out of frontier reseeds at the
    unassigned vertex farthest from the current seeds. Capacity is
    ``ceil(n / k)`` per partition.
    """
    n = len(g.vertices)
    if not 1 <= k <= max(n, 1):
        raise AssignmentError(f"k must be in 1..{n}, got {k}")
    vids = sorted(g.vertices)
    if k == 1:
        return PartitionAssignment(1, {vid: 1 for vid in vids}, scheme_name)
    rng = random.Random(seed)
    adj = g.adjacency

    start = vids[rng.randrange(n)]
    seeds = [_farthest(g, _bfs_dist(g, [start]), vids)]
    dist = _bfs_dist(g, seeds)
    while len(seeds) < k:
        s = _farthest(g, dist, [v for v in vids if v not in dist or dist[v] > 0])
        seeds.append(s)
        for vid, d in _bfs_dist(g, [s]).items():
            if d < dist.get(vid, n + 1):
                dist[vid] = d

    cap = -(-n // k)
    owner: dict[int, int] = {}
    sizes = [0] * (k + 1)
    heaps: list[list[tuple[int, int, int]]] = [[] for _ in range(k + 1)]
    links: list[dict[int, int]] = [dict() for _ in range(k + 1)]
    counter = 0

    def absorb(pid: int, vid: int) -> None:
        nonlocal counter
        owner[vid] = pid
        sizes[pid] += 1
        lk = links[pid]
        for _, w in adj[vid]:
            if w not in owner:
                lk[w] = lk.get(w, 0) + 1
                counter += 1
                heapq.heappush(heaps[pid], (-lk[w], counter, w))

    for pid, s in enumerate(seeds, start=1):
        absorb(pid, s)

    unassigned_order = sorted(vids, key=lambda v: (-dist.get(v, n + 1), v))
    cursor = 0
    while len(owner) < n:
        open_pids = [pid for pid in range(1, k + 1) if sizes[pid] < cap]
        pid = min(open_pids, key=lambda p: (sizes[p], p))
        heap = heaps[pid]
        nxt = None
        while heap:
            neg, _, w = heapq.heappop(heap)
            if w not in owner and -neg == links[pid].get(w):
                nxt = w
                break
        if nxt is None:
            while unassigned_order[cursor] in owner:
                cursor += 1
            nxt = unassigned_order[cursor]
        absorb(pid, nxt)
    return PartitionAssignment(k, owner, scheme_name)


# --------------------------------------------------------------------------
# extended partitions
# --------------------------------------------------------------------------


@dataclass(eq=False)
class ExtendedPartition:
    """One partition plus its replicated one-edge cut set.

    ``graph`` holds local and boundary vertices (each carrying its home pid)
    and local plus cut edges, so its adjacency is complete for every local
    vertex and covers only cut edges for boundary vertices.
    """

    pid: int
    graph: Graph
    local_vids: frozenset[int]
    local_edges: list[Edge]
    cut_edges: list[Edge]

    @property
    def boundary_vids(self) -> frozenset[int]:
        return frozenset(self.graph.vertices) - self.local_vids

    @property
    def local_vertices(self) -> list[Vertex]:
        return [self.graph.vertices[v] for v in sorted(self.local_vids)]

    @property
    def boundary_vertices(self) -> list[Vertex]:
        return [self.graph.vertices[v] for v in sorted(self.boundary_vids)]

    def is_local(self, vid: int) -> bool:
        return vid in self.local_vids

    def local_label_counts(self) -> Counter:
        verts = self.graph.vertices
        return Counter(verts[v].label for v in self.local_vids)

    def cc_count(self) -> int:
        return connected_components(self.graph, self.local_vids, self.local_edges)[0]


def extend_with_cutset(g: Graph, a: PartitionAssignment) -> list[ExtendedPartition]:
    missing = [vid for vid in g.vertices if vid not in a.map]
    if missing:
        raise AssignmentError(f"assignment does not cover vertices {sorted(missing)[:5]}")
    home = a.map
    local: dict[int, list[Edge]] = {pid: [] for pid in range(1, a.k + 1)}
    cut: dict[int, list[Edge]] = {pid: [] for pid in range(1, a.k + 1)}
    for e in g.edges:
        ps, pd = home[e.src], home[e.dst]
        if ps == pd:
            local[ps].append(e)
        else:
            cut[ps].append(e)
            cut[pd].append(e)
    members = a.members()
    parts = []
    for pid in range(1, a.k + 1):
        pg = Graph()
        for vid in members[pid]:
            v = g.vertices[vid]
            pg.add_vertex(Vertex(vid, v.label, pid))
        for e in cut[pid]:
            far = e.dst if home[e.src] == pid else e.src
            if far not in pg.vertices:
                pg.add_vertex(Vertex(far, g.vertices[far].label, home[far]))
        for e in local[pid]:
            pg.add_edge(e)
        for e in cut[pid]:
            pg.add_edge(e)
        parts.append(ExtendedPartition(pid, pg, frozenset(members[pid]), local[pid], cut[pid]))
    return parts


def reconstruct_graph(parts: Iterable[ExtendedPartition]) -> Graph:
    """Merge extended partitions back into one graph, dropping replicas."""
    parts = list(parts)
    vertices: dict[int, Vertex] = {}
    edges: list[Edge] = []
    for p in parts:
        for vid in p.local_vids:
            v = p.graph.vertices[vid]
            vertices[vid] = Vertex(vid, v.label, 0)
        edges.extend(p.local_edges)
        # each cut edge is kept from the partition owning its source
        edges.extend(e for e in p.cut_edges if e.src in p.local_vids)
    return Graph.from_parts((vertices[v] for v in sorted(vertices)), edges)


@dataclass
class SchemeMetrics:
    scheme_name: str
    cc_counts: dict[int, int]
    vertex_counts: dict[int, int]
    edge_counts: dict[int, int]
    total_cc: int = field(init=False)

    def __post_init__(self):
        self.total_cc = sum(self.cc_counts.values())


def scheme_metrics(parts: Sequence[ExtendedPartition], scheme_name: str = "unnamed") -> SchemeMetrics:
    """Connected components per partition over local vertices and local edges only."""
    return SchemeMetrics(
        scheme_name,
        {p.pid: p.cc_count() for p in parts},
        {p.pid: len(p.local_vids) for p in parts},
        {p.pid: len(p.local_edges) for p in parts},
    )


def choose_scheme(schemes: Sequence[SchemeMetrics], mode: str, seed: int = 0) -> str:
    """Pick a partitioning scheme by total connected components.

    ``mode`` is ``MIN-CC``, ``MAX-CC`` or ``RANDOM-CC``; ties go to the
    lexicographically smallest scheme name.
    """
    if not schemes:
        raise ValueError("no schemes to choose from")
    mode = mode.upper()
    ordered = sorted(schemes, key=lambda s: s.scheme_name)
    if mode in ("MIN-CC", "MAX-CC"):
        pick = min if mode == "MIN-CC" else max
        best = pick(s.total_cc for s in ordered)
        return next(s.scheme_name for s in ordered if s.total_cc == best)
    if mode == "RANDOM-CC":
        return random.Random(seed).choice(ordered).scheme_name
    raise ValueError(f"unknown scheme-choice mode {mode!r}")


# --------------------------------------------------------------------------
# partition files and partition sets
# --------------------------------------------------------------------------


def write_partition(p: ExtendedPartition, fh: TextIO) -> None:
    """Graph grammar with 4-token vertex lines; cut edges follow the cutset marker."""
    verts = p.graph.vertices
    fh.write(f"# partition {p.pid}\n")
    for vid in sorted(verts):
        fh.write(format_vertex(verts[vid], True) + "\n")
    for e in p.local_edges:
        fh.write(format_edge(e) + "\n")
    fh.write(CUTSET_MARKER + "\n")
    for e in p.cut_edges:
        fh.write(format_edge(e) + "\n")


def read_partition(fh: TextIO | Iterable[str], pid: int | None = None) -> ExtendedPartition:
    lines = list(fh) if not hasattr(fh, "read") else fh
    vertices: list[Vertex] = []
    local_edges: list[Edge] = []
    cut_edges: list[Edge] = []
    in_cut = False
    header_pid = None

    def scan(it):
        nonlocal in_cut, header_pid
        for raw in it:
            s = raw.strip()
            if s == CUTSET_MARKER:
                in_cut = True
                yield ""
                continue
            if s.startswith("# partition ") and header_pid is None:
                header_pid = int(s.split()[2])
            yield raw

    for lineno, _, toks in iter_records(scan(lines)):
        rec = parse_record(lineno, toks)
        if isinstance(rec, Vertex):
            vertices.append(rec)
        elif in_cut:
            cut_edges.append(rec)
        else:
            local_edges.append(rec)
    pid = pid if pid is not None else header_pid
    if pid is None:
        raise GraphParseError(0, "partition id missing (no '# partition <pid>' header)")
    g = Graph.from_parts(vertices, local_edges + cut_edges)
    local = frozenset(v.vid for v in vertices if v.pid == pid)
    return ExtendedPartition(pid, g, local, local_edges, cut_edges)


class PartitionSet:
    """Where the engines get partitions from; one ``load`` per partition load."""

    scheme_name: str = "unnamed"

    @property
    def pids(self) -> list[int]:
        raise NotImplementedError

    def load(self, pid: int) -> ExtendedPartition:
        raise NotImplementedError

    def label_counts(self, pid: int) -> Counter:
        """Labels of local vertices in ``pid`` with multiplicities."""
        raise NotImplementedError

    def sizes(self, pid: int) -> tuple[int, int]:
        """(vertex count, edge count) of the extended partition."""
        raise NotImplementedError


class InMemoryPartitions(PartitionSet):
    def __init__(self, parts: Iterable[ExtendedPartition], scheme_name: str = "unnamed"):
        self._parts = {p.pid: p for p in parts}
        self._counts = {pid: p.local_label_counts() for pid, p in self._parts.items()}
        self.scheme_name = scheme_name

    @property
    def pids(self) -> list[int]:
        return sorted(self._parts)

    def load(self, pid: int) -> ExtendedPartition:
        return self._parts[pid]

    def label_counts(self, pid: int) -> Counter:
        return self._counts[pid]

    def sizes(self, pid: int) -> tuple[int, int]:
        p = self._parts[pid]
        return len(p.graph.vertices), len(p.graph.edges)


class PartitionDirectory(PartitionSet):
    """Disk-resident partitions written by :func:`save_partitions`.

    Nothing but the manifest is held in memory; every ``load`` re-reads the
    partition file.
    """

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        with open(self.root / "manifest.json", encoding="utf-8") as fh:
            self.manifest = json.load(fh)
        self.scheme_name = self.manifest["scheme_name"]
        self._info = {int(pid): info for pid, info in self.manifest["partitions"].items()}

    @property
    def pids(self) -> list[int]:
        return sorted(self._info)

    def path(self, pid: int) -> Path:
        return self.root / self._info[pid]["file"]

    def load(self, pid: int) -> ExtendedPartition:
        with open(self.path(pid), encoding="utf-8") as fh:
            return read_partition(fh, pid)

    def label_counts(self, pid: int) -> Counter:
        return Counter(dict(self._info[pid]["label_counts"]))

    def sizes(self, pid: int) -> tuple[int, int]:
        info = self._info[pid]
        return (info["local_vertices"] + info["boundary_vertices"],
                info["local_edges"] + info["cut_edges"])

    def catalog_path(self) -> Path:
        return self.root / "catalog.jsonl"


def save_partitions(parts: Sequence[ExtendedPartition], root: str | os.PathLike,
                    scheme_name: str = "unnamed", graph: Graph | None = None) -> PartitionDirectory:
    """Write partition files, a manifest and (given the source graph) its catalog."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    info = {}
    for p in parts:
        name = f"part_{p.pid}.g"
        with open(root / name, "w", encoding="utf-8") as fh:
            write_partition(p, fh)
        info[str(p.pid)] = {
            "file": name,
            "local_vertices": len(p.local_vids),
            "boundary_vertices": len(p.graph.vertices) - len(p.local_vids),
            "local_edges": len(p.local_edges),
            "cut_edges": len(p.cut_edges),
            "cc_count": p.cc_count(),
            "label_counts": sorted(p.local_label_counts().items()),
        }
    manifest = {"scheme_name": scheme_name, "k": len(parts), "partitions": info}
    with open(root / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    if graph is not None:
        with open(root / "catalog.jsonl", "w", encoding="utf-8") as fh:
            build_catalog(graph).dump(fh)
    return PartitionDirectory(root)


def as_partition_set(parts) -> PartitionSet:
    if isinstance(parts, PartitionSet):
        return parts
    return InMemoryPartitions(parts)


def iter_partitions(ps: PartitionSet) -> Iterator[ExtendedPartition]:
    for pid in ps.pids:
        yield ps.load(pid)
