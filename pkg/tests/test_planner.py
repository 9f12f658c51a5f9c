from __future__ import annotations

import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from pgqp.graph import build_catalog, parse_graph, read_graph
from pgqp.matching import oracle_match
from pgqp.opat import run_opat
from pgqp.partition import extend_with_cutset, random_assignment
from pgqp.planner import PlanEdge, estimate_node, estimate_start, format_plan, generate_plan, plan_from_tree
from pgqp.query import AnyOf, QueryValidationError, Wildcard, parse_query

from conftest import DATA, movie, random_graph, random_query_graph


def test_movie_plan_starts_at_unique_title():
    _, _, q, cat = movie()
    est = dict(estimate_start(q.disjuncts[0], cat))
    assert est[1] == 1
    plan = generate_plan(q.disjuncts[0], cat)
    assert plan.start == 1
    assert plan.max_path_length == 2
    assert [pe.child for pe in plan.plan_edges] == [3, 2, 4]


def test_wildcard_estimate_and_rank():
    g = random_graph(random.Random(1), 10)
    cat = build_catalog(g)
    assert estimate_node(Wildcard(), cat) == 10
    qg = parse_query("qv 1 ?\nqv 2 zz\nqe 1 2 u x\n").disjuncts[0]
    # the unseen label has estimate 0 and a wildcard always ranks last
    assert [q for q, _ in estimate_start(qg, cat)] == [2, 1]


def test_anyof_estimate_matches_count():
    g = random_graph(random.Random(4), 120)
    cat = build_catalog(g)
    counts = Counter(v.label for v in g.vertices.values())
    pred = AnyOf(("a", "3"))
    assert estimate_node(pred, cat) == counts["a"] + counts["3"]


def test_single_node_plan():
    cat = build_catalog(parse_graph("v 1 A\n"))
    plan = generate_plan(parse_query("qv 7 A\n").disjuncts[0], cat)
    assert plan.plan_edges == [] and plan.max_path_length == 0 and plan.start == 7


def test_triangle_plan():
    g = parse_graph("v 1 A\nv 2 B\nv 3 C\nv 4 C\nd 1 2 e\nd 2 3 e\nd 3 1 e\nd 2 4 e\n")
    q = parse_query("qv 1 A\nqv 2 B\nqv 3 C\nqe 1 2 d e\nqe 2 3 d e\nqe 3 1 d e\n")
    cat = build_catalog(g)
    plan = generate_plan(q.disjuncts[0], cat)
    assert len(plan.plan_edges) == 2 and len(plan.non_tree_edges) == 1
    assert plan.est_cost < float("inf")
    parts = extend_with_cutset(g, random_assignment(g, 2, 0))
    books, _ = run_opat(parts, q, cat)
    assert books.faa.key_set() == oracle_match(g, q) == {((1, 1), (2, 2), (3, 3))}


def test_disconnected_tree_rejected():
    qg = parse_query("qv 1 A\nqv 2 B\nqv 3 C\nqe 1 2 d e\nqe 2 3 d e\n").disjuncts[0]
    with pytest.raises(QueryValidationError):
        plan_from_tree(qg, 1, [PlanEdge(1, 2, 0)])


def test_format_plan():
    _, _, q, cat = movie()
    text = format_plan(generate_plan(q.disjuncts[0], cat))
    assert text.splitlines()[0] == 'plan disjunct=0 start=1 "Beyond All Boundaries"'
    assert "max_path_length 2" in text


@given(st.integers(0, 100_000))
@settings(max_examples=80, deadline=None)
def test_plan_covers_every_edge_once(seed):
    rng = random.Random(seed)
    g = random_graph(rng, 30)
    qg = random_query_graph(rng, rng.randint(0, 6))
    plan = generate_plan(qg, build_catalog(g))
    used = [pe.qedge for pe in plan.plan_edges] + plan.non_tree_edges
    assert sorted(used) == list(range(len(qg.edges)))
    assert set(plan.depth) == set(qg.nodes)
    assert plan.est_cost >= 0
    if len(qg.nodes) > 1:
        assert plan.max_path_length >= 1
    for pe in plan.plan_edges:
        e = qg.edges[pe.qedge]
        assert {e.src, e.dst} == {pe.parent, pe.child}
        assert plan.depth[pe.child] == plan.depth[pe.parent] + 1
