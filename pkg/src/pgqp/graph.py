"""Labeled graph model, Subdue-style text I/O, catalog and connected components.

Graph files are line oriented::

    # comment
    v <vid> <label> [<pid>]
    u <svid> <dvid> <elabel>
    d <svid> <dvid> <elabel>

Labels containing whitespace, quotes or a leading ``#`` are written double
quoted with backslash escapes.
"""

from __future__ import annotations

import io
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc_sparse

__all__ = [
    "Vertex",
    "Edge",
    "Graph",
    "Catalog",
    "GraphParseError",
    "GraphReferenceError",
    "parse_graph",
    "read_graph",
    "serialize_graph",
    "write_graph",
    "build_catalog",
    "connected_components",
    "parse_number",
    "tokenize",
    "quote_label",
]

_NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


def parse_number(text: str) -> float | None:
    """Return ``text`` as a float if it is a plain decimal number, else None."""
    if _NUMBER_RE.fullmatch(text):
        return float(text)
    return None


class GraphParseError(ValueError):
    """Malformed line in a graph, partition or query file."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class GraphReferenceError(ValueError):
    """An edge refers to a vertex id that is not declared."""


@dataclass(frozen=True, slots=True)
class Vertex:
    vid: int
    label: str
    pid: int = 0


@dataclass(frozen=True, slots=True)
class Edge:
    directed: bool
    src: int
    dst: int
    label: str

    @property
    def dir(self) -> str:
        return "d" if self.directed else "u"

    def other(self, vid: int) -> int:
        return self.dst if vid == self.src else self.src


@dataclass(eq=False)
class Graph:
    """Vertices keyed by id, an edge multiset and an incidence index.

    ``adjacency[vid]`` lists ``(edge, neighbour_vid)`` for every edge incident
    to ``vid`` regardless of direction; a self-loop is listed once.
    """

    vertices: dict[int, Vertex] = field(default_factory=dict)
    edges: list[Edge] = field(default_factory=list)
    adjacency: dict[int, list[tuple[Edge, int]]] = field(default_factory=dict)

    @classmethod
    def from_parts(cls, vertices: Iterable[Vertex], edges: Iterable[Edge]) -> "Graph":
        g = cls()
        for v in vertices:
            g.add_vertex(v)
        for e in edges:
            g.add_edge(e)
        return g

    def add_vertex(self, v: Vertex) -> None:
        if v.vid in self.vertices:
            raise ValueError(f"duplicate vertex id {v.vid}")
        self.vertices[v.vid] = v
        self.adjacency[v.vid] = []

    def add_edge(self, e: Edge) -> None:
        adj = self.adjacency
        if e.src not in adj or e.dst not in adj:
            missing = e.src if e.src not in adj else e.dst
            raise GraphReferenceError(f"edge {e.dir} {e.src} {e.dst} refers to unknown vertex {missing}")
        self.edges.append(e)
        adj[e.src].append((e, e.dst))
        if e.dst != e.src:
            adj[e.dst].append((e, e.src))

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def label(self, vid: int) -> str:
        return self.vertices[vid].label

    def structurally_equal(self, other: "Graph") -> bool:
        return self.vertices == other.vertices and Counter(self.edges) == Counter(other.edges)

    def label_counts(self) -> Counter:
        return Counter(v.label for v in self.vertices.values())


# --------------------------------------------------------------------------
# text I/O
# --------------------------------------------------------------------------

_NEEDS_QUOTES = re.compile(r'[\s"\\]|^#|^$')


def quote_label(label: str) -> str:
    if not _NEEDS_QUOTES.search(label):
        return label
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def tokenize(line: str, lineno: int = 0) -> list[tuple[str, bool]]:
    """Split ``line`` into ``(text, quoted)`` tokens.

    A token is a run of non-blank characters and quoted segments glued
    together; ``quoted`` is True when the whole token was one quoted string.
    """
    tokens: list[tuple[str, bool]] = []
    i, n = 0, len(line)
    while i < n:
        while i < n and line[i].isspace():
            i += 1
        if i >= n:
            break
        buf: list[str] = []
        segments = 0
        fully_quoted = True
        while i < n and not line[i].isspace():
            segments += 1
            if line[i] == '"':
                i += 1
                while True:
                    if i >= n:
                        raise GraphParseError(lineno, "unterminated quoted string")
                    c = line[i]
                    if c == "\\" and i + 1 < n:
                        buf.append(line[i + 1])
                        i += 2
                    elif c == '"':
                        i += 1
                        break
                    else:
                        buf.append(c)
                        i += 1
            else:
                fully_quoted = False
                while i < n and not line[i].isspace() and line[i] != '"':
                    buf.append(line[i])
                    i += 1
        tokens.append(("".join(buf), fully_quoted and segments == 1))
    return tokens


def _split(line: str, lineno: int) -> list[str]:
    if '"' not in line:
        return line.split()
    return [t for t, _ in tokenize(line, lineno)]


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise GraphParseError(lineno, f"{what} must be an integer, got {tok!r}") from None


def iter_records(lines: Iterable[str]) -> Iterator[tuple[int, str, list[str]]]:
    """Yield ``(lineno, raw_line, tokens)`` for every non-blank, non-comment line."""
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line, _split(line, lineno)


def parse_record(lineno: int, toks: list[str]) -> Vertex | Edge:
    kind = toks[0]
    if kind == "v":
        if len(toks) not in (3, 4):
            raise GraphParseError(lineno, "vertex line needs 'v <vid> <label> [<pid>]'")
        vid = _int(toks[1], lineno, "vertex id")
        if vid <= 0:
            raise GraphParseError(lineno, f"vertex id must be positive, got {vid}")
        pid = _int(toks[3], lineno, "partition id") if len(toks) == 4 else 0
        if pid < 0:
            raise GraphParseError(lineno, f"partition id must be non-negative, got {pid}")
        return Vertex(vid, toks[2], pid)
    if kind in ("u", "d"):
        if len(toks) != 4:
            raise GraphParseError(lineno, f"edge line needs '{kind} <svid> <dvid> <elabel>'")
        return Edge(kind == "d", _int(toks[1], lineno, "source id"), _int(toks[2], lineno, "destination id"), toks[3])
    raise GraphParseError(lineno, f"unknown record type {kind!r}")


def parse_graph(text: str | TextIO | Iterable[str]) -> Graph:
    """Parse a graph from a string, an open text file or an iterable of lines.

    Vertex and edge lines may be interleaved, but every edge must refer to
    vertices declared somewhere in the input.
    """
    lines = io.StringIO(text) if isinstance(text, str) else text
    vertices: list[Vertex] = []
    edges: list[tuple[int, Edge]] = []
    for lineno, _, toks in iter_records(lines):
        rec = parse_record(lineno, toks)
        if isinstance(rec, Vertex):
            vertices.append(rec)
        else:
            edges.append((lineno, rec))
    g = Graph()
    for v in vertices:
        if v.vid in g.vertices:
            raise GraphParseError(0, f"duplicate vertex id {v.vid}")
        g.add_vertex(v)
    for lineno, e in edges:
        try:
            g.add_edge(e)
        except GraphReferenceError as exc:
            raise GraphReferenceError(f"line {lineno}: {exc}") from None
    return g


def read_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh)


def format_vertex(v: Vertex, with_pid: bool) -> str:
    if with_pid:
        return f"v {v.vid} {quote_label(v.label)} {v.pid}"
    return f"v {v.vid} {quote_label(v.label)}"


def format_edge(e: Edge) -> str:
    return f"{e.dir} {e.src} {e.dst} {quote_label(e.label)}"


def serialize_graph(g: Graph, with_pid: bool | None = None) -> str:
    out = io.StringIO()
    write_graph(g, out, with_pid=with_pid)
    return out.getvalue()


def write_graph(g: Graph, fh: TextIO, with_pid: bool | None = None) -> None:
    """Write ``g``; pids are emitted when any vertex carries a nonzero pid."""
    if with_pid is None:
        with_pid = any(v.pid for v in g.vertices.values())
    for vid in sorted(g.vertices):
        fh.write(format_vertex(g.vertices[vid], with_pid) + "\n")
    for e in g.edges:
        fh.write(format_edge(e) + "\n")


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------


@dataclass
class Catalog:
    """Single-pass statistics used by the planner.

    ``connection_count[(a, e, b)]`` counts incidences where an ``a``-labeled
    vertex reaches a ``b``-labeled neighbour over an ``e``-labeled edge, in
    either edge direction.
    """

    vertex_count: int = 0
    edge_count: int = 0
    instance_count: dict[str, int] = field(default_factory=dict)
    connection_count: dict[tuple[str, str, str], int] = field(default_factory=dict)
    numeric_values: dict[str, float] = field(default_factory=dict)

    def avg_connection(self, a: str, e: str, b: str) -> float | None:
        n = self.connection_count.get((a, e, b))
        if n is None:
            return None
        return n / self.instance_count[a]

    def numeric_range(self, label: str) -> tuple[float, float] | None:
        x = self.numeric_values.get(label)
        return None if x is None else (x, x)

    @property
    def min_value(self) -> float | None:
        return min(self.numeric_values.values(), default=None)

    @property
    def max_value(self) -> float | None:
        return max(self.numeric_values.values(), default=None)

    def triples_from(self) -> dict[str, list[tuple[str, str, int]]]:
        idx: dict[str, list[tuple[str, str, int]]] = {}
        for (a, e, b), n in self.connection_count.items():
            idx.setdefault(a, []).append((e, b, n))
        return idx

    # jsonl persistence: one record per line, labels as json strings
    def dump(self, fh: TextIO) -> None:
        import json

        fh.write(json.dumps(["G", self.vertex_count, self.edge_count]) + "\n")
        for label in sorted(self.instance_count):
            fh.write(json.dumps(["I", label, self.instance_count[label]]) + "\n")
        for (a, e, b) in sorted(self.connection_count):
            fh.write(json.dumps(["C", a, e, b, self.connection_count[(a, e, b)]]) + "\n")

    @classmethod
    def load(cls, fh: TextIO, keep=None) -> "Catalog":
        """Read a dumped catalog; ``keep(a, e, b)`` filters connection triples."""
        import json

        cat = cls()
        for line in fh:
            rec = json.loads(line)
            tag = rec[0]
            if tag == "C":
                if keep is None or keep(rec[1], rec[2], rec[3]):
                    cat.connection_count[(rec[1], rec[2], rec[3])] = rec[4]
            elif tag == "I":
                cat.instance_count[rec[1]] = rec[2]
                x = parse_number(rec[1])
                if x is not None:
                    cat.numeric_values[rec[1]] = x
            elif tag == "G":
                cat.vertex_count, cat.edge_count = rec[1], rec[2]
        return cat


def build_catalog(g: Graph) -> Catalog:
    cat = Catalog(vertex_count=len(g.vertices), edge_count=len(g.edges))
    inst: dict[str, int] = {}
    for v in g.vertices.values():
        inst[v.label] = inst.get(v.label, 0) + 1
    cat.instance_count = inst
    for label in inst:
        x = parse_number(label)
        if x is not None:
            cat.numeric_values[label] = x
    conn: dict[tuple[str, str, str], int] = {}
    verts = g.vertices
    for e in g.edges:
        ls, ld = verts[e.src].label, verts[e.dst].label
        key = (ls, e.label, ld)
        conn[key] = conn.get(key, 0) + 1
        if e.src != e.dst:
            key = (ld, e.label, ls)
            conn[key] = conn.get(key, 0) + 1
    cat.connection_count = conn
    return cat


# --------------------------------------------------------------------------
# connectivity
# --------------------------------------------------------------------------


def connected_components(g: Graph, vids: Iterable[int] | None = None,
                         edges: Iterable[Edge] | None = None) -> tuple[int, dict[int, int]]:
    """Undirected connected components of ``g`` (or of a vertex/edge subset).

    Component ids are numbered 0.. in order of each component's smallest vid.
    Edges touching a vertex outside ``vids`` are ignored.
    """
    order = sorted(g.vertices if vids is None else vids)
    n = len(order)
    if n == 0:
        return 0, {}
    index = {vid: i for i, vid in enumerate(order)}
    rows, cols = [], []
    for e in (g.edges if edges is None else edges):
        i, j = index.get(e.src), index.get(e.dst)
        if i is not None and j is not None:
            rows.append(i)
            cols.append(j)
    m = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    count, labels = _cc_sparse(m, directed=False)
    # renumber by first appearance so ids follow each component's smallest vid
    _, first = np.unique(labels, return_index=True)
    rank = np.empty(count, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(count)
    labels = rank[labels]
    return int(count), dict(zip(order, labels.tolist()))
