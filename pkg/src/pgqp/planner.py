"""Cost-based plan generation: a rooted spanning tree over each query pattern.

The root is the node with the fewest estimated instances; the tree is grown
greedily by the frontier edge with the smallest estimated fan-out, then laid
out breadth-first from the root. Query edges left out of the tree close
cycles and are checked as filters once both endpoints are bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import Catalog
from .query import AnyOf, Compare, Exact, Predicate, QueryGraph, QueryValidationError, Wildcard

__all__ = ["PlanEdge", "QueryPlan", "estimate_node", "estimate_start", "edge_fanout",
           "generate_plan", "plan_from_tree", "format_plan"]


@dataclass(frozen=True)
class PlanEdge:
    parent: int
    child: int
    qedge: int


@dataclass
class QueryPlan:
    query_graph: QueryGraph
    start: int
    plan_edges: list[PlanEdge]
    non_tree_edges: list[int]
    est_cost: float = 0.0
    disjunct: int = 0
    depth: dict[int, int] = field(default_factory=dict)

    @property
    def max_path_length(self) -> int:
        return max(self.depth.values(), default=0)

    @property
    def start_pred(self) -> Predicate:
        return self.query_graph.nodes[self.start]

    def children(self) -> dict[int, list[PlanEdge]]:
        out: dict[int, list[PlanEdge]] = {q: [] for q in self.query_graph.nodes}
        for pe in self.plan_edges:
            out[pe.parent].append(pe)
        return out

    def leaves(self) -> set[int]:
        parents = {pe.parent for pe in self.plan_edges}
        return set(self.query_graph.nodes) - parents


def estimate_node(pred: Predicate, cat: Catalog) -> int:
    if isinstance(pred, Exact):
        return cat.instance_count.get(pred.label, 0)
    if isinstance(pred, Wildcard):
        return cat.vertex_count
    return sum(n for label, n in cat.instance_count.items() if pred.matches(label))


def estimate_start(qg: QueryGraph, cat: Catalog) -> list[tuple[int, int]]:
    """Query nodes ranked by estimated instance count; wildcards always last."""
    est = [(q, estimate_node(p, cat)) for q, p in qg.nodes.items()]
    est.sort(key=lambda t: (isinstance(qg.nodes[t[0]], Wildcard), t[1], t[0]))
    return est


def _labels(pred: Predicate, labels) -> list[str] | None:
    """Concrete labels a predicate can match, or None for 'all of them'."""
    if isinstance(pred, Exact):
        return [pred.label]
    if isinstance(pred, AnyOf):
        return list(pred.labels)
    if isinstance(pred, Compare):
        return [x for x in labels if pred.matches(x)]
    return None


def edge_fanout(parent: Predicate, edge: Predicate, child: Predicate, cat: Catalog,
                index: dict[str, list[tuple[str, str, int]]] | None = None) -> float:
    """Average number of child matches reached from one parent match.

    Exact labels use the catalog triple directly; other predicates sum the
    matching triples and divide by the parent instances. No matching triple
    costs 1.0.
    """
    if isinstance(parent, Exact) and isinstance(edge, Exact) and isinstance(child, Exact):
        avg = cat.avg_connection(parent.label, edge.label, child.label)
        return 1.0 if avg is None else avg
    if index is None:
        index = cat.triples_from()
    parents = _labels(parent, cat.instance_count)
    if parents is None:
        parents = list(index)
    total = 0
    for a in parents:
        for e, b, n in index.get(a, ()):
            if edge.matches(e) and child.matches(b):
                total += n
    if total == 0:
        return 1.0
    inst = sum(cat.instance_count.get(a, 0) for a in parents)
    return total / inst if inst else 1.0


def generate_plan(qg: QueryGraph, cat: Catalog, disjunct: int = 0) -> QueryPlan:
    if not qg.is_connected():
        raise QueryValidationError("cannot plan a disconnected query graph")
    start, est = estimate_start(qg, cat)[0]
    nb = qg.neighbours()
    index = None
    if not all(isinstance(p, Exact) for p in qg.nodes.values()) or \
            not all(isinstance(e.pred, Exact) for e in qg.edges):
        index = cat.triples_from()
    in_tree = {start}
    chosen: list[PlanEdge] = []
    card = float(max(est, 1))
    cost = 0.0
    while len(in_tree) < len(qg.nodes):
        best = None
        for q in sorted(in_tree):
            for i, w in nb[q]:
                if w in in_tree:
                    continue
                e = qg.edges[i]
                f = edge_fanout(qg.nodes[q], e.pred, qg.nodes[w], cat, index)
                key = (f, i, q)
                if best is None or key < best[0]:
                    best = (key, PlanEdge(q, w, i))
        (f, _, _), pe = best
        card *= f
        cost += card
        chosen.append(pe)
        in_tree.add(pe.child)
    plan = plan_from_tree(qg, start, chosen, disjunct)
    plan.est_cost = cost
    return plan


def plan_from_tree(qg: QueryGraph, start: int, tree: list[PlanEdge], disjunct: int = 0) -> QueryPlan:
    """Lay a spanning tree out breadth-first from ``start``; other edges become filters.

    Children of one node keep the order in which they appear in ``tree``.
    """
    kids: dict[int, list[PlanEdge]] = {}
    for pe in tree:
        kids.setdefault(pe.parent, []).append(pe)
    ordered: list[PlanEdge] = []
    depth = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for q in frontier:
            for pe in kids.get(q, ()):
                ordered.append(pe)
                depth[pe.child] = depth[q] + 1
                nxt.append(pe.child)
        frontier = nxt
    if len(depth) != len(qg.nodes) or len(ordered) != len(tree):
        raise QueryValidationError("plan edges do not form a spanning tree rooted at the start node")
    used = {pe.qedge for pe in ordered}
    non_tree = [i for i in range(len(qg.edges)) if i not in used]
    return QueryPlan(qg, start, ordered, non_tree, 0.0, disjunct, depth)


def format_plan(plan: QueryPlan) -> str:
    qg = plan.query_graph
    lines = [f"plan disjunct={plan.disjunct} start={plan.start} {qg.nodes[plan.start].token()}"]
    for pe in plan.plan_edges:
        e = qg.edges[pe.qedge]
        lines.append(f"edge {pe.parent} -> {pe.child} via qe{pe.qedge} "
                     f"{'d' if e.directed else 'u'} {e.pred.token()} {qg.nodes[pe.child].token()}")
    for i in plan.non_tree_edges:
        e = qg.edges[i]
        lines.append(f"check qe{i} {e.src} {e.dst} {'d' if e.directed else 'u'} {e.pred.token()}")
    lines.append(f"cost {plan.est_cost:.6g}")
    lines.append(f"max_path_length {plan.max_path_length}")
    return "\n".join(lines) + "\n"
