"""Parser and printer for the graph-query subset used by the detectors.

Supported: PREFIX declarations, SELECT with explicit variables, WHERE groups of
triple patterns (with ``;`` property lists and ``a``), FILTER over comparisons
joined by ``&&``/``||``, MINUS groups and ORDER BY with ASC/DESC. Nested plain
``{ ... }`` blocks are spliced into the enclosing group.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from .terms import DECIMAL, INTEGER, STRING, Iri, Literal, Node, Term, Variable

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

COMPARISONS = ("=", "!=", "<", ">", "<=", ">=")


class QueryError(Exception):
    """Syntax or semantic error in query text; carries the character offset."""

    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        if pos is not None and text is not None:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{message} at line {line}, column {col}"
        super().__init__(message)


class UnknownPrefix(QueryError):
    pass


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class TriplePattern:
    subject: Term
    predicate: Iri
    object: Term

    def variables(self) -> list[str]:
        return [t.name for t in (self.subject, self.predicate, self.object) if isinstance(t, Variable)]


@dataclass(frozen=True)
class Comparison:
    op: str
    left: Term
    right: Term


@dataclass(frozen=True)
class BoolOp:
    op: str  # "&&" or "||"
    left: "Expr"
    right: "Expr"


Expr = Union[Comparison, BoolOp]


@dataclass(frozen=True)
class Filter:
    expr: Expr


@dataclass(frozen=True)
class Minus:
    group: "Group"


GroupElement = Union[TriplePattern, Filter, Minus]


@dataclass(frozen=True)
class Group:
    elements: tuple[GroupElement, ...]

    @property
    def patterns(self) -> list[TriplePattern]:
        return [e for e in self.elements if isinstance(e, TriplePattern)]

    @property
    def filters(self) -> list[Filter]:
        return [e for e in self.elements if isinstance(e, Filter)]

    @property
    def minuses(self) -> list[Minus]:
        return [e for e in self.elements if isinstance(e, Minus)]

    def bound_variables(self) -> set[str]:
        return {v for p in self.patterns for v in p.variables()}


@dataclass(frozen=True)
class OrderKey:
    var: Variable
    descending: bool = False


@dataclass(frozen=True)
class Query:
    prefixes: tuple[tuple[str, str], ...]
    select_vars: tuple[Variable, ...]
    where: Group
    order_by: tuple[OrderKey, ...] = ()

    @property
    def pattern_count(self) -> int:
        """Triple patterns in the top-level group (MINUS groups excluded)."""
        return len(self.where.patterns)


# -- tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s?()&]*>)
  | (?P<pname>[A-Za-z][\w\-]*:[\w\-]*|:[\w\-]*)
  | (?P<var>\?[A-Za-z][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>[+-]?(?:\d*\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+))
  | (?P<op><=|>=|!=|&&|\|\||=|<|>)
  | (?P<punct>[{}().;])
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QueryError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), pos))
        pos = m.end()
    out.append(Token("eof", "", len(text)))
    return out


def _unescape(raw: str) -> str:
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), raw[1:-1])


def parse_literal(tok: Token) -> Literal:
    if tok.kind == "string":
        return Literal(_unescape(tok.text), STRING)
    if re.fullmatch(r"[+-]?\d+", tok.text):
        return Literal(int(tok.text), INTEGER)
    return Literal(float(tok.text), DECIMAL)


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token | None = None) -> QueryError:
        tok = tok or self.tok
        found = tok.text or "end of input"
        return QueryError(f"{message}, found {found!r}", tok.pos, self.text)

    def advance(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def keyword(self, word: str) -> bool:
        return self.tok.kind == "name" and self.tok.text.upper() == word

    def expect_keyword(self, word: str) -> None:
        if not self.keyword(word):
            raise self.error(f"expected {word}")
        self.advance()

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind not in ("punct", "op"):
            raise self.error(f"expected {text!r}")
        return self.advance()

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "op") and self.tok.text == text

    # terms
    def iri(self) -> Iri:
        tok = self.advance()
        if tok.kind == "iri":
            return Iri(tok.text[1:-1])
        if tok.kind == "pname":
            prefix, local = tok.text.split(":", 1)
            if prefix not in self.prefixes:
                raise UnknownPrefix(f"unknown prefix {prefix!r}", tok.pos, self.text)
            return Iri(self.prefixes[prefix] + local)
        raise self.error("expected an IRI", tok)

    def term(self, allow_literal: bool = True) -> Term:
        tok = self.tok
        if tok.kind == "var":
            self.advance()
            return Variable(tok.text[1:])
        if tok.kind in ("iri", "pname"):
            return self.iri()
        if allow_literal and tok.kind in ("string", "number"):
            self.advance()
            return parse_literal(tok)
        raise self.error("expected a variable, IRI or literal")

    def verb(self) -> Iri:
        if self.tok.kind == "name" and self.tok.text == "a":
            self.advance()
            return Iri(RDF_TYPE)
        return self.iri()

    # structure
    def query(self) -> Query:
        while self.keyword("PREFIX"):
            self.advance()
            tok = self.advance()
            if tok.kind != "pname" or not tok.text.endswith(":"):
                raise self.error("expected a prefix name like 'ex:'", tok)
            ns = self.advance()
            if ns.kind != "iri":
                raise self.error("expected a namespace IRI", ns)
            # a redeclared prefix rebinds it
            self.prefixes[tok.text[:-1]] = ns.text[1:-1]
        self.expect_keyword("SELECT")
        select = []
        while self.tok.kind == "var":
            select.append(Variable(self.advance().text[1:]))
        if not select:
            raise self.error("expected at least one SELECT variable")
        self.expect_keyword("WHERE")
        where = self.group()
        order = []
        if self.keyword("ORDER"):
            self.advance()
            self.expect_keyword("BY")
            while True:
                if self.tok.kind == "var":
                    order.append(OrderKey(Variable(self.advance().text[1:])))
                elif self.keyword("ASC") or self.keyword("DESC"):
                    desc = self.advance().text.upper() == "DESC"
                    self.expect("(")
                    if self.tok.kind != "var":
                        raise self.error("expected a variable")
                    order.append(OrderKey(Variable(self.advance().text[1:]), desc))
                    self.expect(")")
                else:
                    break
            if not order:
                raise self.error("expected ORDER BY keys")
        if self.tok.kind != "eof":
            raise self.error("unexpected trailing input")
        q = Query(tuple(self.prefixes.items()), tuple(select), where, tuple(order))
        _check_scoping(q, self.text)
        return q

    def group(self) -> Group:
        self.expect("{")
        elements = self.group_body()
        self.expect("}")
        if not elements:
            raise self.error("empty group")
        return Group(tuple(elements))

    def group_body(self) -> list[GroupElement]:
        elements: list[GroupElement] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated group")
            if self.at("{"):
                self.advance()
                elements.extend(self.group_body())
                self.expect("}")
            elif self.at("."):
                self.advance()
            elif self.keyword("FILTER"):
                self.advance()
                self.expect("(")
                elements.append(Filter(self.expr()))
                self.expect(")")
            elif self.keyword("MINUS"):
                self.advance()
                elements.append(Minus(self.group()))
            else:
                elements.extend(self.triples())
        return elements

    def triples(self) -> list[TriplePattern]:
        subject = self.term(allow_literal=False)
        out = [TriplePattern(subject, self.verb(), self.term())]
        while self.at(";"):
            self.advance()
            if self.at(".") or self.at("}"):
                break
            out.append(TriplePattern(subject, self.verb(), self.term()))
        return out

    def expr(self) -> Expr:
        left = self.conj()
        while self.at("||"):
            self.advance()
            left = BoolOp("||", left, self.conj())
        return left

    def conj(self) -> Expr:
        left = self.primary()
        while self.at("&&"):
            self.advance()
            left = BoolOp("&&", left, self.primary())
        return left

    def primary(self) -> Expr:
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        left = self.term()
        if not (self.tok.kind == "op" and self.tok.text in COMPARISONS):
            raise self.error("expected a comparison operator")
        op = self.advance().text
        return Comparison(op, left, self.term())


def _check_scoping(q: Query, text: str) -> None:
    bound = q.where.bound_variables()
    for v in list(q.select_vars) + [k.var for k in q.order_by]:
        if v.name not in bound:
            raise QueryError(f"variable ?{v.name} does not appear in any top-level pattern", None, text)


def parse_query(text: str) -> Query:
    return _Parser(text).query()


# -- printer -----------------------------------------------------------------

def _term_text(t: Term) -> str:
    return str(t)


def _expr_text(e: Expr) -> str:
    if isinstance(e, Comparison):
        return f"{_term_text(e.left)} {e.op} {_term_text(e.right)}"
    return f"({_expr_text(e.left)} {e.op} {_expr_text(e.right)})"


def _group_lines(g: Group, indent: str) -> Iterator[str]:
    for el in g.elements:
        if isinstance(el, TriplePattern):
            yield f"{indent}{_term_text(el.subject)} {el.predicate} {_term_text(el.object)} ."
        elif isinstance(el, Filter):
            yield f"{indent}FILTER({_expr_text(el.expr)})"
        else:
            yield f"{indent}MINUS {{"
            yield from _group_lines(el.group, indent + "  ")
            yield f"{indent}}}"


def to_text(q: Query) -> str:
    """Render a query so that `parse_query(to_text(q)) == q`."""
    lines = [f"PREFIX {p}: <{ns}>" for p, ns in q.prefixes]
    lines.append("SELECT " + " ".join(str(v) for v in q.select_vars) + " WHERE {")
    lines.extend(_group_lines(q.where, "  "))
    lines.append("}")
    if q.order_by:
        keys = [f"DESC({k.var})" if k.descending else f"ASC({k.var})" for k in q.order_by]
        lines.append("ORDER BY " + " ".join(keys))
    return "\n".join(lines) + "\n"


def parse_node(tok: Token) -> Node:
    if tok.kind == "iri":
        return Iri(tok.text[1:-1])
    if tok.kind in ("string", "number"):
        return parse_literal(tok)
    raise QueryError(f"expected an IRI or literal, found {tok.text!r}", tok.pos)
