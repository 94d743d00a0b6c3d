"""Random stores and queries over a tiny vocabulary, so joins actually hit."""

from __future__ import annotations

import random

from ghostwatch.kg.query import BoolOp, Comparison, Filter, Group, Minus, OrderKey, Query, TriplePattern
from ghostwatch.kg.terms import Iri, Literal, Triple, Variable

EX = "http://example.org/"
SUBJECTS = [Iri(f"{EX}s{i}") for i in range(6)]
PREDICATES = [Iri(f"{EX}p{i}") for i in range(4)]
VARS = [Variable(n) for n in ("a", "b", "c", "d")]
OPS = ("=", "!=", "<", ">", "<=", ">=")


def random_object(rng: random.Random):
    kind = rng.randrange(4)
    if kind == 0:
        return rng.choice(SUBJECTS)
    if kind == 1:
        return Literal.of(rng.randrange(6))
    if kind == 2:
        return Literal.of(rng.choice((0.5, 1.0, 2.5, 3.0, -1.25)))
    return Literal.of(rng.choice(("a", "b", "c", 'q"x', "tab\tz")))


def random_store(rng: random.Random, max_triples: int = 200) -> list[Triple]:
    n = rng.randrange(max_triples + 1)
    return [Triple(rng.choice(SUBJECTS), rng.choice(PREDICATES), random_object(rng)) for _ in range(n)]


def _term(rng: random.Random, constant):
    return rng.choice(VARS) if rng.random() < 0.6 else constant


def random_pattern(rng: random.Random, force_var: bool = False) -> TriplePattern:
    subject = rng.choice(VARS) if force_var else _term(rng, rng.choice(SUBJECTS))
    return TriplePattern(subject, rng.choice(PREDICATES), _term(rng, random_object(rng)))


def _comparison(rng: random.Random, bound: list[Variable]) -> Comparison:
    left = rng.choice(bound)
    right = rng.choice(bound) if rng.random() < 0.3 else random_object(rng)
    return Comparison(rng.choice(OPS), left, right)


def random_query(rng: random.Random, max_patterns: int = 4) -> Query:
    patterns = [random_pattern(rng, force_var=(i == 0)) for i in range(rng.randint(1, max_patterns))]
    bound = sorted({v for p in patterns for v in p.variables()})
    bound_vars = [Variable(v) for v in bound]
    elements: list = list(patterns)
    if rng.random() < 0.4:
        expr = _comparison(rng, bound_vars)
        if rng.random() < 0.4:
            expr = BoolOp(rng.choice(("&&", "||")), expr, _comparison(rng, bound_vars))
        elements.insert(rng.randrange(len(elements) + 1), Filter(expr))
    if rng.random() < 0.4:
        inner = [random_pattern(rng) for _ in range(rng.randint(1, 2))]
        inner_elements: list = list(inner)
        inner_bound = sorted({v for p in inner for v in p.variables()})
        if inner_bound and rng.random() < 0.3:
            inner_elements.append(Filter(_comparison(rng, [Variable(v) for v in inner_bound])))
        elements.append(Minus(Group(tuple(inner_elements))))
    select = rng.sample(bound_vars, rng.randint(1, len(bound_vars)))
    order: tuple[OrderKey, ...] = ()
    if rng.random() < 0.4:
        keys = rng.sample(bound_vars, rng.randint(1, min(2, len(bound_vars))))
        order = tuple(OrderKey(k, rng.random() < 0.5) for k in keys)
    return Query((), tuple(select), Group(tuple(elements)), order)
