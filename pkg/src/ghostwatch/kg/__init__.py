"""Embedded knowledge graph: terms, store, query parser and evaluator."""

from .query import Query, QueryError, UnknownPrefix, parse_query, to_text
from .store import EvalStats, SolutionSet, TripleStore, load_snapshot
from .terms import Iri, Literal, Triple, Variable

__all__ = [
    "EvalStats", "Iri", "Literal", "Query", "QueryError", "SolutionSet", "Triple",
    "TripleStore", "UnknownPrefix", "Variable", "load_snapshot", "parse_query", "to_text",
]
