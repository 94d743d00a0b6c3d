"""In-memory triple store and instrumented query evaluator."""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .query import (
    Comparison,
    Expr,
    Group,
    Minus,
    Query,
    QueryError,
    TriplePattern,
    parse_node,
    tokenize,
)
from .terms import Iri, Literal, Node, Term, Triple, Variable, term_sort_key

Row = dict[str, Node]


@dataclass
class EvalStats:
    iterations: int = 0
    triples_read: int = 0
    elapsed: float = 0.0


@dataclass
class SolutionSet:
    variables: tuple[str, ...]
    rows: list[Row]
    stats: EvalStats = field(default_factory=EvalStats)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[Row]:
        return iter(self.rows)

    def table(self) -> str:
        header = "\t".join(f"?{v}" for v in self.variables)
        body = ["\t".join(str(r[v]) for v in self.variables) for r in self.rows]
        return "\n".join([header, *body])


class RWLock:
    """Many readers or one writer; writers are not starved by new readers."""

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False
        self._waiting_writers = 0

    @contextmanager
    def read(self):
        with self._cond:
            while self._writer or self._waiting_writers:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if not self._readers:
                    self._cond.notify_all()

    @contextmanager
    def write(self):
        with self._cond:
            self._waiting_writers += 1
            while self._writer or self._readers:
                self._cond.wait()
            self._waiting_writers -= 1
            self._writer = True
        try:
            yield
        finally:
            with self._cond:
                self._writer = False
                self._cond.notify_all()


class TripleStore:
    """Set of triples with subject, predicate and object hash indexes.

    `writes` counts every triple presented to `insert_triples` (duplicates
    included); `reads` counts triples matched by query evaluation.
    """

    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples: dict[Triple, None] = {}
        self._index: tuple[dict[Node, list[Triple]], ...] = ({}, {}, {})
        self._lock = RWLock()
        self._counter_lock = threading.Lock()
        self.reads = 0
        self.writes = 0
        self.iterations = 0
        self._mark = (0, 0)
        if triples:
            self.insert_triples(list(triples))

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def __iter__(self) -> Iterator[Triple]:
        with self._lock.read():
            return iter(list(self._triples))

    def insert_triples(self, batch: Sequence[Triple]) -> int:
        """Set-semantics insert; returns how many triples were new."""
        added = 0
        with self._lock.write():
            for t in batch:
                if t in self._triples:
                    continue
                self._triples[t] = None
                for pos, term in enumerate(t):
                    self._index[pos].setdefault(term, []).append(t)
                added += 1
        with self._counter_lock:
            self.writes += len(batch)
        return added

    def objects(self, subject: Iri, predicate: Iri) -> list[Node]:
        """Direct lookup for host-side follow-ups; counted as reads."""
        with self._lock.read():
            found = [t.object for t in self._index[0].get(subject, ()) if t.predicate == predicate]
        with self._counter_lock:
            self.reads += len(found)
        return found

    def evaluate(self, query: Query) -> SolutionSet:
        start = time.perf_counter()
        stats = EvalStats()
        with self._lock.read():
            rows = _eval_group(self, query.where, stats)
        if query.order_by:
            # stable sorts applied from the last key to the first
            for key in reversed(query.order_by):
                rows.sort(key=lambda r, v=key.var.name: term_sort_key(r[v]), reverse=key.descending)
        names = tuple(v.name for v in query.select_vars)
        rows = [{n: r[n] for n in names} for r in rows]
        stats.elapsed = time.perf_counter() - start
        with self._counter_lock:
            self.reads += stats.triples_read
            self.iterations += stats.iterations
        return SolutionSet(names, rows, stats)

    def read_write_rates(self, window_s: float) -> tuple[float, float]:
        """Reads/s and writes/s since the previous call (or construction)."""
        if window_s <= 0:
            raise ValueError("window_s must be positive")
        with self._counter_lock:
            r0, w0 = self._mark
            self._mark = (self.reads, self.writes)
            return (self.reads - r0) / window_s, (self.writes - w0) / window_s

    def candidates(self, s: Node | None, p: Node | None, o: Node | None) -> Sequence[Triple]:
        """Smallest index bucket among the bound positions (all triples if none)."""
        best: Sequence[Triple] | None = None
        for pos, term in enumerate((s, p, o)):
            if term is None:
                continue
            bucket = self._index[pos].get(term, ())
            if best is None or len(bucket) < len(best):
                best = bucket
        return list(self._triples) if best is None else best

    def dump(self) -> str:
        with self._lock.read():
            return "".join(f"{t}\n" for t in self._triples)


# -- evaluation --------------------------------------------------------------

def _resolve(term: Term, row: Mapping[str, Node]) -> Node | None:
    if isinstance(term, Variable):
        return row.get(term.name)
    return term


def _match_pattern(store: TripleStore, pattern: TriplePattern, rows: list[Row], stats: EvalStats) -> list[Row]:
    out: list[Row] = []
    terms = (pattern.subject, pattern.predicate, pattern.object)
    names = [t.name if isinstance(t, Variable) else None for t in terms]
    for row in rows:
        bound = [t if n is None else row.get(n) for t, n in zip(terms, names)]
        # unbound positions; a variable repeated within the pattern must agree
        free = [(i, n) for i, n in enumerate(names) if n is not None and bound[i] is None]
        checks = [(i, b) for i, b in enumerate(bound) if b is not None]
        candidates = store.candidates(*bound)
        stats.iterations += len(candidates)
        for triple in candidates:
            values = (triple.subject, triple.predicate, triple.object)
            for i, b in checks:
                if values[i] is not b and values[i] != b:
                    break
            else:
                _extend(row, values, free, out, stats)
    return out


def _extend(row: Row, values: tuple, free: list, out: list[Row], stats: EvalStats) -> None:
    new = dict(row)
    for i, n in free:
        prev = new.get(n)
        if prev is not None and prev != values[i]:
            return
        new[n] = values[i]
    stats.triples_read += 1
    out.append(new)


def _compare(op: str, a: Node | None, b: Node | None) -> bool:
    if a is None or b is None:
        return False
    if isinstance(a, Literal) and isinstance(b, Literal):
        if a.numeric != b.numeric:
            return False
        x, y = a.value, b.value
    elif isinstance(a, Iri) and isinstance(b, Iri):
        if op not in ("=", "!="):
            return False
        x, y = a.value, b.value
    else:
        return False
    if op == "=":
        return x == y
    if op == "!=":
        return x != y
    if op == "<":
        return x < y
    if op == ">":
        return x > y
    if op == "<=":
        return x <= y
    return x >= y


def eval_expr(e: Expr, row: Mapping[str, Node]) -> bool:
    if isinstance(e, Comparison):
        return _compare(e.op, _resolve(e.left, row), _resolve(e.right, row))
    if e.op == "&&":
        return eval_expr(e.left, row) and eval_expr(e.right, row)
    return eval_expr(e.left, row) or eval_expr(e.right, row)


def _eval_group(store: TripleStore, group: Group, stats: EvalStats) -> list[Row]:
    rows: list[Row] = [{}]
    for el in group.elements:
        if isinstance(el, TriplePattern):
            rows = _match_pattern(store, el, rows, stats)
        elif isinstance(el, Minus):
            rows = _minus(rows, _eval_group(store, el.group, stats))
    for f in group.filters:
        rows = [r for r in rows if eval_expr(f.expr, r)]
    return rows


def _minus(left: list[Row], right: list[Row]) -> list[Row]:
    if not left or not right:
        return left
    # every row of a group binds the same variables (no OPTIONAL in the subset)
    shared = sorted(left[0].keys() & right[0].keys())
    if not shared:
        return left
    excluded = {tuple(r[v] for v in shared) for r in right}
    return [r for r in left if tuple(r[v] for v in shared) not in excluded]


# -- snapshots ---------------------------------------------------------------

def load_snapshot(text: str) -> TripleStore:
    triples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            toks = [t for t in tokenize(line) if t.kind != "eof"]
            if len(toks) != 3:
                raise QueryError(f"expected 3 terms, found {len(toks)}")
            s, p, o = (parse_node(t) for t in toks)
            triples.append(Triple(s, p, o))
        except (QueryError, TypeError, ValueError) as exc:
            raise QueryError(f"snapshot line {lineno}: {exc}") from None
    return TripleStore(triples)
