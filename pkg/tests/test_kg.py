from __future__ import annotations

import random
import threading
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostwatch.kg import (
    Iri,
    Literal,
    QueryError,
    Triple,
    TripleStore,
    UnknownPrefix,
    Variable,
    load_snapshot,
    parse_query,
    to_text,
)
from ghostwatch.kg.query import RDF_TYPE, Comparison, Filter, Minus
from ghostwatch.kg.store import RWLock

from . import gen
from .oracles import brute_force_query, is_ordered

EX = "http://example.org/"


def iri(name: str) -> Iri:
    return Iri(EX + name)


def as_multiset(rows, names):
    return Counter(tuple(r[n] for n in names) for r in rows)


# -- terms -------------------------------------------------------------------

def test_literal_types_are_strict():
    assert Literal.of(3).datatype == "integer"
    assert Literal.of(3.0).datatype == "decimal"
    assert Literal.of("3").datatype == "string"
    with pytest.raises(TypeError):
        Literal(3)  # string datatype by default
    with pytest.raises(TypeError):
        Literal.of(True)
    with pytest.raises(ValueError):
        Literal.of(float("nan"))


def test_triple_positions():
    with pytest.raises(TypeError):
        Triple(Literal.of("x"), iri("p"), iri("o"))
    with pytest.raises(ValueError):
        Variable("1bad")


# -- parser ------------------------------------------------------------------

def test_property_list_and_type_shorthand():
    q = parse_query("""
        PREFIX ex: <http://example.org/>
        SELECT ?s ?v WHERE { ?s a ex:Thing ; ex:value ?v . FILTER(?v >= 2 && ?v != 5) }
        ORDER BY DESC(?v) ?s
    """)
    assert [p.predicate for p in q.where.patterns] == [Iri(RDF_TYPE), iri("value")]
    assert all(p.subject == Variable("s") for p in q.where.patterns)
    assert q.pattern_count == 2
    assert [(k.var.name, k.descending) for k in q.order_by] == [("v", True), ("s", False)]
    assert isinstance(q.where.filters[0].expr.left, Comparison)


def test_and_binds_tighter_than_or():
    q = parse_query("SELECT ?x WHERE { ?x <http://e/p> ?y FILTER(?y = 1 || ?y = 2 && ?y = 3) }")
    expr = q.where.filters[0].expr
    assert expr.op == "||" and expr.right.op == "&&"


def test_redeclared_prefix_rebinds():
    q = parse_query("PREFIX p: <http://a/> PREFIX p: <http://b/> SELECT ?x WHERE { ?x p:q ?y }")
    assert q.where.patterns[0].predicate == Iri("http://b/q")


def test_nested_groups_are_spliced():
    q = parse_query("SELECT ?x WHERE { { ?x <http://e/p> ?y . } MINUS { ?x <http://e/q> ?z } }")
    assert q.pattern_count == 1
    assert isinstance(q.where.elements[1], Minus)


@pytest.mark.parametrize("text", [
    "SELECT ?x WHERE { ?x <http://e/p> ?y",
    "SELECT WHERE { ?x <http://e/p> ?y }",
    "SELECT ?x WHERE { }",
    "SELECT ?z WHERE { ?x <http://e/p> ?y }",
    "SELECT ?x WHERE { ?x <http://e/p> ?y FILTER(?y) }",
    "SELECT ?x WHERE { ?x <http://e/p> ?y } ORDER BY",
    "SELECT ?x WHERE { ?x <http://e/p> ?y } LIMIT 3",
    "SELECT ?x WHERE { ?x <http://e/p> ?y . $ }",
    'SELECT ?x WHERE { "lit" <http://e/p> ?x }',
])
def test_malformed_queries_raise(text):
    with pytest.raises(QueryError):
        parse_query(text)


def test_unknown_prefix_reports_position():
    with pytest.raises(UnknownPrefix) as err:
        parse_query("SELECT ?x WHERE {\n  ?x zz:p ?y }")
    assert "line 2, column 6" in str(err.value)


@settings(max_examples=300)
@given(st.integers(0, 2**32))
def test_round_trip_random_queries(seed):
    q = gen.random_query(random.Random(seed))
    assert parse_query(to_text(q)) == q


# -- store -------------------------------------------------------------------

def test_set_semantics_and_counters():
    store = TripleStore()
    t = Triple(iri("s"), iri("p"), Literal.of(1))
    assert store.insert_triples([t, t]) == 1
    assert store.insert_triples([t]) == 0
    assert len(store) == 1 and t in store
    assert store.writes == 3
    assert store.read_write_rates(1.5) == (0.0, 2.0)
    assert store.read_write_rates(1.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        store.read_write_rates(0)


def test_empty_store_query_costs_nothing():
    res = TripleStore().evaluate(parse_query("SELECT ?x WHERE { ?x <http://e/p> ?y }"))
    assert len(res) == 0
    assert res.stats.iterations == 0


def test_candidates_use_smallest_bucket():
    store = TripleStore([Triple(iri(f"s{i}"), iri("p"), Literal.of(i)) for i in range(10)])
    store.insert_triples([Triple(iri("s1"), iri("q"), Literal.of(0))])
    assert len(store.candidates(iri("s1"), iri("p"), None)) == 2  # subject bucket, not the 10-wide predicate one
    assert len(store.candidates(None, None, None)) == 11


def test_flight_query_minus_example():
    # one ADS-B report whose callsign has no flight plan -> one row
    from ghostwatch.detect import bundled_query
    from ghostwatch.ingest import ADSB_P, V, NS

    r = Iri(NS.DATA + "report/R1")
    store = TripleStore([
        Triple(r, V.type, V.ADSBFlightPosition),
        Triple(r, ADSB_P["hasCallsign"], Literal.of("BAD1")),
        Triple(r, ADSB_P["hasLatitude"], Literal.of(45.0)),
        Triple(r, ADSB_P["hasLongitude"], Literal.of(-73.0)),
        Triple(r, ADSB_P["hasTimeStamp"], Literal.of(10)),
        Triple(Iri(NS.DATA + "fp/OK1"), V.hasCallsign, Literal.of("OK1")),
    ])
    res = store.evaluate(bundled_query("flight"))
    assert res.rows == [{"callsign": Literal.of("BAD1"), "report": r, "lat": Literal.of(45.0),
                         "long": Literal.of(-73.0), "time": Literal.of(10)}]
    store.insert_triples([Triple(Iri(NS.DATA + "fp/BAD1"), V.hasCallsign, Literal.of("BAD1"))])
    assert len(store.evaluate(bundled_query("flight"))) == 0


def test_comparison_semantics():
    store = TripleStore([
        Triple(iri("a"), iri("v"), Literal.of(2)),
        Triple(iri("b"), iri("v"), Literal.of(2.5)),
        Triple(iri("c"), iri("v"), Literal.of("10")),
        Triple(iri("d"), iri("v"), iri("x")),
    ])

    def names(flt):
        q = parse_query(f"SELECT ?s WHERE {{ ?s <{EX}v> ?v FILTER({flt}) }}")
        return sorted(r["s"].value[len(EX):] for r in store.evaluate(q))

    assert names("?v > 1") == ["a", "b"]  # int vs decimal compare numerically; string never
    assert names('?v < "2"') == ["c"]  # lexicographic
    assert names(f"?v = <{EX}x>") == ["d"]
    assert names(f"?v < <{EX}y>") == []  # IRIs only support equality
    assert names("?w = 1") == []  # unbound


def test_order_by_mixed_types():
    store = TripleStore([
        Triple(iri("a"), iri("v"), Literal.of("z")),
        Triple(iri("b"), iri("v"), Literal.of(3)),
        Triple(iri("c"), iri("v"), iri("x")),
        Triple(iri("d"), iri("v"), Literal.of(1.5)),
    ])
    q = parse_query(f"SELECT ?s WHERE {{ ?s <{EX}v> ?v }} ORDER BY ?v")
    assert [r["s"].value[-1] for r in store.evaluate(q)] == ["c", "d", "b", "a"]


def test_snapshot_round_trip():
    rng = random.Random(3)
    store = TripleStore(gen.random_store(rng))
    again = load_snapshot(store.dump())
    assert set(again) == set(store)
    assert len(load_snapshot("")) == 0
    with pytest.raises(QueryError, match="snapshot line 2"):
        load_snapshot(f"<{EX}a> <{EX}b> <{EX}c>\n<{EX}a> <{EX}b>\n")


# -- oracle equivalence ----------------------------------------------------------

def check_against_oracle(seed: int) -> None:
    rng = random.Random(seed)
    triples = gen.random_store(rng)
    query = gen.random_query(rng)
    names = [v.name for v in query.select_vars]
    got = TripleStore(triples).evaluate(query)
    want = brute_force_query(triples, query)
    assert as_multiset(got.rows, names) == as_multiset(want, names), to_text(query)
    assert got.stats.iterations >= 0 and got.stats.triples_read >= 0
    if query.order_by and {k.var.name for k in query.order_by} <= set(names):
        assert is_ordered(got.rows, query), to_text(query)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_evaluator_matches_brute_force(seed):
    check_against_oracle(seed)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_minus_free_queries_are_monotone(seed):
    rng = random.Random(seed)
    query = gen.random_query(rng)
    query = type(query)(query.prefixes, query.select_vars,
                        type(query.where)(tuple(e for e in query.where.elements if not isinstance(e, Minus))),
                        query.order_by)
    base = gen.random_store(rng, 100)
    extra = gen.random_store(rng, 50)
    names = [v.name for v in query.select_vars]
    before = as_multiset(TripleStore(base).evaluate(query).rows, names)
    after = as_multiset(TripleStore(base + extra).evaluate(query).rows, names)
    assert not (before - after)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_single_pattern_iterations_bound_rows(seed):
    rng = random.Random(seed)
    store = TripleStore(gen.random_store(rng))
    query = gen.random_query(rng, max_patterns=1)
    if query.where.minuses:
        return
    res = store.evaluate(query)
    assert res.stats.iterations >= len(res)


def test_filters_apply_wherever_they_appear():
    q1 = parse_query(f"SELECT ?s WHERE {{ FILTER(?v > 1) ?s <{EX}v> ?v }}")
    q2 = parse_query(f"SELECT ?s WHERE {{ ?s <{EX}v> ?v FILTER(?v > 1) }}")
    store = TripleStore([Triple(iri(f"s{i}"), iri("v"), Literal.of(i)) for i in range(4)])
    assert store.evaluate(q1).rows == store.evaluate(q2).rows
    assert isinstance(q1.where.elements[0], Filter)


# -- concurrency ---------------------------------------------------------------

def test_readers_never_see_partial_batches():
    store = TripleStore()
    query = parse_query(f"SELECT ?s WHERE {{ ?s <{EX}p> ?o }}")
    seen = []
    stop = threading.Event()

    def reader():
        while not stop.is_set():
            seen.append(len(store.evaluate(query)))

    threads = [threading.Thread(target=reader) for _ in range(3)]
    for t in threads:
        t.start()
    for b in range(30):
        store.insert_triples([Triple(iri(f"s{b}_{i}"), iri("p"), Literal.of(i)) for i in range(10)])
    stop.set()
    for t in threads:
        t.join()
    assert all(n % 10 == 0 for n in seen)


def test_rwlock_excludes_writer_during_read():
    lock = RWLock()
    events = []
    with lock.read():
        t = threading.Thread(target=lambda: (lock.write().__enter__(), events.append("w")))
        t.start()
        t.join(timeout=0.2)
        assert events == []
    t.join(timeout=2)
    assert events == ["w"]
