from __future__ import annotations

import random
from statistics import fmean

import pytest
from hypothesis import given, settings, strategies as st

from pgqp.graph import build_catalog
from pgqp.matching import Answer, PartialAnswer, Seed, oracle_match
from pgqp.opat import HEURISTICS, make_plans, run_opat
from pgqp.parallel import (COMPLETE, MapRecord, map_task, reduce_task, run_mapreduce_mp, run_traditional_mp,
                           shuffle_group)
from pgqp.partition import extend_with_cutset, partition_builtin, random_assignment
from pgqp.planner import generate_plan
from pgqp.query import parse_query

from conftest import FIXTURES, movie, fixture, load_fixture, random_graph, random_query


def _partial(d, *bindings):
    return PartialAnswer(d, tuple(bindings), frozenset())


def test_map_one_edge_from_boundary_seed():
    _, parts, _, cat = movie()
    q = parse_query('qv 1 "Beyond All Boundaries"\nqv 2 ?\nqv 3 Year\nqe 1 2 u "In year"\nqe 2 3 u is\n')
    plans = make_plans(q, cat)
    [r] = map_task(parts[1], [(0, Seed(vid=5))], plans)
    assert r.key == 2
    assert [(b[1], b[2]) for b in r.value.bindings] == [(5, 1), (6, 2)]


def test_map_without_matching_edges():
    _, parts, _, cat = movie()
    plans = make_plans(parse_query('qv 1 "Beyond All Boundaries"\nqv 2 ?\nqe 1 2 u "Directed by"\n'), cat)
    assert map_task(parts[1], [(0, Seed(vid=5))], plans) == []


def test_map_chain_two_edges():
    g, parts, _, cat = fixture("chain")
    q = parse_query("qv 1 A\nqv 2 B\nqv 3 C\nqe 1 2 d x\nqe 2 3 d y\n")
    plans = make_plans(q, cat)
    [r1] = map_task(parts[0], [(0, Seed())], plans)
    assert r1.key == 2
    [r2] = map_task(parts[1], [(0, Seed(r1.entry_vid, r1.value))], plans)
    assert r2.key == COMPLETE and r2.value.key == ((1, 1), (2, 2), (3, 3))


def test_record_key_must_match_value():
    with pytest.raises(ValueError):
        MapRecord(COMPLETE, _partial(0, (1, 1, 1, "A")))
    with pytest.raises(ValueError):
        MapRecord(3, Answer(0, ((1, 1, 1),)))


def test_record_round_trip():
    r = MapRecord(2, PartialAnswer(0, ((1, 5, 1, "Beyond All Boundaries"), (2, 6, 2, "2011")), frozenset({1})),
                  6, "2011", 2)
    assert r.dumps() == ('{"key":2,"disjunct":0,"entry":[6,"2011",2],'
                         '"bindings":[[1,5,1,"Beyond All Boundaries"],[2,6,2,"2011"]],"checked":[1]}')
    assert MapRecord.loads(r.dumps()) == r
    a = MapRecord(COMPLETE, Answer(0, ((1, 5, 1),)))
    assert MapRecord.loads(a.dumps()) == a


def test_shuffle_groups_by_key():
    recs = [MapRecord(k, _partial(0, (1, i, k, "A")), i, "A", 1) for i, k in enumerate([3, 2, 2])]
    groups = shuffle_group(recs)
    assert list(groups) == [2, 3]
    assert [len(v) for v in groups.values()] == [2, 1]
    assert shuffle_group([]) == {}


def test_shuffle_puts_complete_last():
    recs = [MapRecord(COMPLETE, Answer(0, ((1, 1, 1),))), MapRecord(9, _partial(0, (1, 1, 1, "A")), 1, "A", 1)]
    assert list(shuffle_group(recs)) == [9, COMPLETE]


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_shuffle_accounts_for_every_record(seed):
    rng = random.Random(seed)
    recs = []
    for i in range(100):
        if rng.random() < 0.2:
            recs.append(MapRecord(COMPLETE, Answer(0, ((1, i, 1),))))
        else:
            k = rng.randint(1, 6)
            recs.append(MapRecord(k, _partial(0, (1, i, k, "A")), i, "A", 1))
    groups = shuffle_group(recs)
    assert sum(map(len, groups.values())) == 100
    assert all(r.key == k for k, v in groups.items() for r in v)
    assert sorted(r.dumps() for v in groups.values() for r in v) == sorted(r.dumps() for r in recs)
    assert shuffle_group(list(reversed(recs))) == groups


def test_reduce_complete_group():
    recs = [MapRecord(COMPLETE, Answer(0, ((1, i, 1),))) for i in range(3)]
    sni, ima, faa = reduce_task(COMPLETE, recs)
    assert sni == [] and ima == [] and len(faa) == 3


def test_reduce_dedups_answers():
    r = MapRecord(COMPLETE, Answer(0, ((1, 4, 1),)))
    assert len(reduce_task(COMPLETE, [r, r])[2]) == 1


def test_reduce_partials():
    recs = [MapRecord(3, _partial(0, (1, i, 1, "A"), (2, 10 + i, 3, "B")), 10 + i, "B", 2) for i in range(2)]
    sni, ima, faa = reduce_task(3, recs)
    assert faa == [] and len(ima) == 2
    assert [(e.pid, e.vid, e.label, e.ima_ref) for e in sni] == [(3, 10, "B", 0), (3, 11, "B", 1)]
    assert all(c.target_pid == 3 for c in ima)


@pytest.mark.parametrize("name", FIXTURES)
def test_trad_p1_is_opat(name):
    g, parts, q, cat = load_fixture(name)
    for h in HEURISTICS:
        for s in range(10):
            b1, l1 = run_opat(parts, q, cat, h, s)
            b2, l2 = run_traditional_mp(parts, q, cat, h, 1, s)
            assert l1.load_sequence == l2.load_sequence
            assert [a.key for a in b1.faa.answers] == [a.key for a in b2.faa.answers]


def test_trad_barrier_stamps():
    g = random_graph(random.Random(21), 200)
    parts = extend_with_cutset(g, random_assignment(g, 4, 1))
    q = parse_query("qv 1 a\nqv 2 ?\nqv 3 ?\nqe 1 2 d ?\nqe 2 3 d ?\n")
    books, log = run_traditional_mp(parts, q, build_catalog(g), "max-sn", 2, 0)
    for it in log.iterations:
        assert len(it.chosen) <= min(2, it.required)
        # nothing produced in this iteration is consumed before the barrier
        assert it.max_stamp_seen < it.index
    assert books.faa.key_set() == oracle_match(g, q)


def test_trad_merge_order_irrelevant():
    g = random_graph(random.Random(5), 150)
    parts = extend_with_cutset(g, random_assignment(g, 4, 2))
    q = parse_query("qv 1 b\nqv 2 ?\nqv 3 ?\nqe 1 2 u x\nqe 2 3 d ?\n")
    cat = build_catalog(g)
    b1, l1 = run_traditional_mp(parts, q, cat, "max-sn", 4, 0)
    b2, l2 = run_traditional_mp(parts, q, cat, "max-sn", 4, 0, merge_order=lambda c: list(reversed(c)))
    assert b1.faa.key_set() == b2.faa.key_set() == oracle_match(g, q)
    assert l1.num_iterations == l2.num_iterations


def test_trad_iterations_bounded_by_path_length():
    for name in ("within", "chain", "movie"):
        g, parts, q, cat = load_fixture(name)
        [plan] = make_plans(q, cat)
        books, log = run_traditional_mp(parts, q, cat, "max-sn", 8, 0)
        assert books.faa.key_set() == oracle_match(g, q)
        assert log.num_iterations <= max(1, plan.max_path_length)


def test_trad_max_not_worse_than_random():
    g = random_graph(random.Random(40), 400, avg_degree=1.3)
    parts = extend_with_cutset(g, partition_builtin(g, 4, 0))
    q = parse_query("qv 1 a\nqv 2 ?\nqv 3 b\nqe 1 2 d ?\nqe 2 3 u ?\n")
    cat = build_catalog(g)
    mx = run_traditional_mp(parts, q, cat, "max-sn", 2, 0)[1].AL
    rnd = fmean(run_traditional_mp(parts, q, cat, "random-sn", 2, s)[1].AL for s in range(50))
    assert mx <= rnd


def test_p_must_be_positive():
    _, parts, q, cat = movie()
    with pytest.raises(ValueError):
        run_traditional_mp(parts, q, cat, p=0)
    with pytest.raises(ValueError):
        run_mapreduce_mp(parts, q, cat, m=0)


def test_mr_movie():
    g, parts, q, cat = movie()
    books, log = run_mapreduce_mp(parts, q, cat)
    assert books.faa.key_set() == oracle_match(g, q)
    [plan] = make_plans(q, cat)
    assert log.num_iterations >= plan.max_path_length


def test_mr_local_fixture_hits_bound():
    g, parts, q, cat = fixture("local3")
    [plan] = make_plans(q, cat)
    books, log = run_mapreduce_mp(parts, q, cat)
    assert books.faa.key_set() == oracle_match(g, q)
    assert log.num_iterations == plan.max_path_length == 3


@pytest.mark.parametrize("m", [1, 2, None])
def test_mr_merge_order_and_slots(m):
    g = random_graph(random.Random(17), 120)
    parts = extend_with_cutset(g, random_assignment(g, 4, 3))
    q = parse_query("qv 1 c\nqv 2 ?\nqv 3 ?\nqe 1 2 d ?\nqe 3 2 u y\n")
    cat = build_catalog(g)
    want = oracle_match(g, q)
    b1, _ = run_mapreduce_mp(parts, q, cat, "min-sn", m, 1)
    b2, _ = run_mapreduce_mp(parts, q, cat, "min-sn", m, 1, merge_order=lambda k: list(reversed(k)))
    assert b1.faa.key_set() == b2.faa.key_set() == want


@given(st.integers(0, 100_000), st.sampled_from([1, 2, 4]), st.sampled_from(HEURISTICS))
@settings(max_examples=60, deadline=None)
def test_parallel_modes_match_oracle(seed, k, h):
    rng = random.Random(seed)
    g = random_graph(rng, rng.randint(k, 50))
    q = random_query(rng, max_edges=4)
    q.limit = None
    parts = extend_with_cutset(g, random_assignment(g, k, seed))
    cat = build_catalog(g)
    want = oracle_match(g, q)
    for p in (1, 2, 4):
        assert run_traditional_mp(parts, q, cat, h, p, seed)[0].faa.key_set() == want
    for m in (1, 2, None):
        books, log = run_mapreduce_mp(parts, q, cat, h, m, seed)
        assert books.faa.key_set() == want
        if want and m is None:
            assert log.num_iterations >= min(p.max_path_length for p in make_plans(q, cat))
