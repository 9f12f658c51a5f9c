"""Partition-local plan expansion and the whole-graph reference matcher.

A partial answer binds plan nodes to ``(vid, pid, label)``. Its outstanding
work is a list of *items*: tree edges whose parent is bound but whose child
is not, and cycle-closing edges whose endpoints are both bound but which
have not been verified yet. An item can be done in a partition only if the
partition holds the full adjacency of the vertex it starts from, i.e. that
vertex is local there. When nothing left is doable, the partial becomes a
continuation addressed to the home partition of its first outstanding item.

Matching is injective on vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .graph import Edge, Graph
from .partition import ExtendedPartition
from .planner import PlanEdge, QueryPlan
from .query import Query, QueryEdge

__all__ = [
    "Binding",
    "PartialAnswer",
    "Answer",
    "Continuation",
    "Seed",
    "ExpansionStats",
    "SeedError",
    "expand_in_partition",
    "step_in_partition",
    "oracle_match",
    "answer_key",
    "format_answer",
]

Binding = tuple[int, int, str]  # (vid, pid, label)


class SeedError(LookupError):
    """A continuation names a vertex the partition does not hold."""


@dataclass(frozen=True)
class PartialAnswer:
    disjunct: int
    bindings: tuple[tuple[int, int, int, str], ...]  # (qnode, vid, pid, label), sorted by qnode
    checked: frozenset[int] = frozenset()

    @classmethod
    def from_map(cls, disjunct: int, bind: dict[int, Binding], checked: Iterable[int] = ()) -> "PartialAnswer":
        return cls(disjunct, tuple((q, *bind[q]) for q in sorted(bind)), frozenset(checked))

    def as_map(self) -> dict[int, Binding]:
        return {q: (vid, pid, label) for q, vid, pid, label in self.bindings}

    @property
    def matched_tree_edges(self) -> int:
        return len(self.bindings) - 1

    def frontier(self, plan: QueryPlan) -> list[tuple[int, PlanEdge]]:
        bound = {b[0] for b in self.bindings}
        return [(pe.parent, pe) for pe in plan.plan_edges if pe.parent in bound and pe.child not in bound]


@dataclass(frozen=True)
class Answer:
    disjunct: int
    bindings: tuple[tuple[int, int, int], ...]  # (qnode, vid, pid), sorted by qnode

    @property
    def key(self) -> tuple[tuple[int, int], ...]:
        return tuple((q, vid) for q, vid, _ in self.bindings)


def answer_key(bindings: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(bindings))


def format_answer(a: Answer) -> str:
    return " ".join(f"{q}={vid}@{pid}" for q, vid, pid in a.bindings)


@dataclass(frozen=True)
class Continuation:
    partial: PartialAnswer
    target_pid: int
    entry_vid: int
    entry_label: str
    entry_qnode: int


@dataclass(frozen=True)
class Seed:
    """Where expansion begins.

    ``Seed()`` binds the plan root to every local vertex matching its
    predicate. ``Seed(vid=v)`` roots the match at vertex ``v``; if ``v`` is a
    boundary vertex only the edges replicated into this partition are seen
    from it. ``Seed(vid=v, partial=pa)`` resumes ``pa`` at ``v``.
    """

    vid: int | None = None
    partial: PartialAnswer | None = None


@dataclass
class ExpansionStats:
    seeds: int = 0
    popped: int = 0
    pushed: int = 0
    expanded: int = 0
    completed: int = 0
    continued: int = 0
    rejected: int = 0   # failed a cycle-closing check
    candidates_rejected: int = 0  # incident edges that failed an edge/vertex predicate or injectivity

    def balanced(self) -> bool:
        return (self.seeds + self.pushed == self.popped
                == self.completed + self.continued + self.rejected + self.expanded)


def _edge_fits(qe: QueryEdge, e: Edge, vsrc: int, vdst: int) -> bool:
    """Does graph edge ``e`` realise query edge ``qe`` between the given vertices?"""
    if qe.directed:
        if not e.directed or e.src != vsrc or e.dst != vdst:
            return False
    elif not ((e.src == vsrc and e.dst == vdst) or (e.src == vdst and e.dst == vsrc)):
        return False
    return qe.pred.matches(e.label)


class _Expander:
    def __init__(self, part: ExtendedPartition, plan: QueryPlan, visible: frozenset[int] = frozenset()):
        self.part = part
        self.plan = plan
        self.qg = plan.query_graph
        self.adj = part.graph.adjacency
        self.verts = part.graph.vertices
        self.local = part.local_vids
        self.visible = visible

    def is_here(self, vid: int) -> bool:
        return vid in self.local or vid in self.visible

    def pending_edges(self, bind: dict[int, Binding]) -> list[PlanEdge]:
        return [pe for pe in self.plan.plan_edges if pe.parent in bind and pe.child not in bind]

    def pending_checks(self, bind: dict[int, Binding], checked: frozenset[int]) -> list[int]:
        edges = self.qg.edges
        return [i for i in self.plan.non_tree_edges
                if i not in checked and edges[i].src in bind and edges[i].dst in bind]

    def run_checks(self, bind: dict[int, Binding], checked: frozenset[int]) -> frozenset[int] | None:
        """Verify every pending check that can be decided here; None if one fails."""
        done = set()
        for i in self.pending_checks(bind, checked):
            qe = self.qg.edges[i]
            va, vb = bind[qe.src][0], bind[qe.dst][0]
            if self.is_here(va):
                x = va
            elif self.is_here(vb):
                x = vb
            else:
                continue
            if not any(_edge_fits(qe, e, va, vb) for e, _ in self.adj[x]):
                return None
            done.add(i)
        return checked | done if done else checked

    def children(self, bind: dict[int, Binding], pe: PlanEdge) -> Iterator[dict[int, Binding]]:
        qe = self.qg.edges[pe.qedge]
        u = bind[pe.parent][0]
        child_pred = self.qg.nodes[pe.child]
        used = {b[0] for b in bind.values()}
        parent_is_src = qe.src == pe.parent
        seen = set()
        verts = self.verts
        for e, w in self.adj[u]:
            if w in used or w in seen:
                continue
            vs, vd = (u, w) if parent_is_src else (w, u)
            if not _edge_fits(qe, e, vs, vd):
                continue
            wv = verts[w]
            if not child_pred.matches(wv.label):
                continue
            seen.add(w)
            nb = dict(bind)
            nb[pe.child] = (w, wv.pid, wv.label)
            yield nb

    def next_item(self, bind: dict[int, Binding], checked: frozenset[int]):
        """First outstanding item as ``(kind, item, vid)``; doable ones first."""
        edges = self.pending_edges(bind)
        for pe in edges:
            if self.is_here(bind[pe.parent][0]):
                return "edge", pe, bind[pe.parent][0]
        if edges:
            pe = edges[0]
            return "remote", pe.parent, bind[pe.parent][0]
        checks = self.pending_checks(bind, checked)
        if checks:
            q = self.qg.edges[checks[0]].src
            return "remote", q, bind[q][0]
        return None

    def root_bindings(self, seed: Seed) -> Iterator[dict[int, Binding]]:
        pred = self.plan.start_pred
        start = self.plan.start
        verts = self.verts
        if seed.vid is None:
            for vid in sorted(self.local):
                v = verts[vid]
                if pred.matches(v.label):
                    yield {start: (vid, v.pid, v.label)}
        else:
            v = verts.get(seed.vid)
            if v is None:
                raise SeedError(f"vertex {seed.vid} is not in partition {self.part.pid}")
            if pred.matches(v.label):
                yield {start: (v.vid, v.pid, v.label)}


def _answer(disjunct: int, bind: dict[int, Binding]) -> Answer:
    return Answer(disjunct, tuple((q, bind[q][0], bind[q][1]) for q in sorted(bind)))


def expand_in_partition(part: ExtendedPartition, plan: QueryPlan, seeds: Iterable[Seed],
                        stats: ExpansionStats | None = None) -> tuple[list[Answer], list[Continuation]]:
    """Expand every seed as far as ``part`` allows.

    All plan edges reachable without leaving the partition are consumed
    before a continuation is emitted; failing branches are dropped.
    """
    stats = stats if stats is not None else ExpansionStats()
    answers: list[Answer] = []
    conts: list[Continuation] = []
    d = plan.disjunct
    for seed in seeds:
        visible = frozenset()
        if seed.partial is not None:
            if seed.vid is not None and seed.vid not in part.graph.vertices:
                raise SeedError(f"continuation vertex {seed.vid} is not in partition {part.pid}")
            stack = [(seed.partial.as_map(), seed.partial.checked)]
        else:
            if seed.vid is not None and seed.vid not in part.local_vids:
                visible = frozenset([seed.vid])
            stack = [(b, frozenset()) for b in _Expander(part, plan).root_bindings(seed)]
        ex = _Expander(part, plan, visible)
        stats.seeds += len(stack)
        stack.reverse()
        while stack:
            bind, checked = stack.pop()
            stats.popped += 1
            checked = ex.run_checks(bind, checked)
            if checked is None:
                stats.rejected += 1
                continue
            item = ex.next_item(bind, checked)
            if item is None:
                stats.completed += 1
                answers.append(_answer(d, bind))
                continue
            kind, what, vid = item
            if kind == "remote":
                stats.continued += 1
                _, pid, label = bind[what]
                conts.append(Continuation(PartialAnswer.from_map(d, bind, checked), pid, vid, label, what))
                continue
            stats.expanded += 1
            kids = list(ex.children(bind, what))
            stats.pushed += len(kids)
            stack.extend((k, checked) for k in reversed(kids))
    return answers, conts


def step_in_partition(part: ExtendedPartition, plan: QueryPlan, seed: Seed
                      ) -> list[tuple[int | None, PartialAnswer | Answer, int, str, int]]:
    """Advance the partials behind ``seed`` by exactly one plan edge.

    Returns ``(target, value, entry_vid, entry_label, entry_qnode)`` tuples;
    ``target`` is None for complete answers. Partials whose next edge lives
    in another partition are forwarded there unchanged.
    """
    d = plan.disjunct
    visible = frozenset()
    if seed.partial is not None:
        if seed.vid is not None and seed.vid not in part.graph.vertices:
            raise SeedError(f"continuation vertex {seed.vid} is not in partition {part.pid}")
        states = [(seed.partial.as_map(), seed.partial.checked)]
    else:
        if seed.vid is not None and seed.vid not in part.local_vids:
            visible = frozenset([seed.vid])
        states = [(b, frozenset()) for b in _Expander(part, plan).root_bindings(seed)]
    ex = _Expander(part, plan, visible)
    out = []

    def route(bind, checked):
        checked = ex.run_checks(bind, checked)
        if checked is None:
            return
        item = ex.next_item(bind, checked)
        if item is None:
            out.append((None, _answer(d, bind), 0, "", 0))
            return
        kind, what, vid = item
        q = what.parent if kind == "edge" else what
        _, pid, label = bind[q]
        out.append((pid, PartialAnswer.from_map(d, bind, checked), vid, label, q))

    for bind, checked in states:
        checked = ex.run_checks(bind, checked)
        if checked is None:
            continue
        item = ex.next_item(bind, checked)
        if item is None:
            out.append((None, _answer(d, bind), 0, "", 0))
            continue
        kind, what, vid = item
        if kind == "remote":
            route(bind, checked)
            continue
        for nb in ex.children(bind, what):
            route(nb, checked)
    return out


# --------------------------------------------------------------------------
# reference matcher
# --------------------------------------------------------------------------


def _edge_between(g: Graph, qe: QueryEdge, va: int, vb: int) -> bool:
    # va is bound to qe.src and vb to qe.dst
    for e, w in g.adjacency[va]:
        if qe.directed:
            ok = e.directed and e.src == va and e.dst == vb
        else:
            ok = w == vb and (e.src == vb or e.dst == vb)
        if ok and qe.pred.matches(e.label):
            return True
    return False


def oracle_match(g: Graph, q: Query) -> set[tuple[tuple[int, int], ...]]:
    """All answers of ``q`` in ``g`` by plain backtracking, as canonical keys.

    Ignores partitions, plans and the query limit.
    """
    result: set[tuple[tuple[int, int], ...]] = set()
    for qg in q.disjuncts:
        # connected visiting order so each later node has an assigned neighbour
        order = [min(qg.nodes)]
        nb = qg.neighbours()
        while len(order) < len(qg.nodes):
            for x in order:
                w = next((w for _, w in sorted(nb[x], key=lambda t: t[1]) if w not in order), None)
                if w is not None:
                    order.append(w)
                    break
        pos = {x: i for i, x in enumerate(order)}
        back = {x: [qg.edges[i] for i, w in nb[x] if pos[w] < pos[x]] +
                   [qg.edges[i] for i, w in nb[x] if w == x]
                for x in order}
        assign: dict[int, int] = {}
        used: set[int] = set()

        def candidates(x):
            if pos[x] == 0:
                return sorted(g.vertices)
            qe = back[x][0]
            anchor = qe.other(x)
            return sorted({w for _, w in g.adjacency[assign[anchor]]})

        def fits(x, v):
            if v in used or not qg.nodes[x].matches(g.vertices[v].label):
                return False
            for qe in back[x]:
                va = v if qe.src == x else assign[qe.src]
                vb = v if qe.dst == x else assign[qe.dst]
                if not _edge_between(g, qe, va, vb):
                    return False
            return True

        def search(i):
            if i == len(order):
                result.add(tuple(sorted(assign.items())))
                return
            x = order[i]
            for v in candidates(x):
                if fits(x, v):
                    assign[x] = v
                    used.add(v)
                    search(i + 1)
                    used.discard(v)
                    del assign[x]

        search(0)
    return result
