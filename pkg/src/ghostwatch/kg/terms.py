"""RDF-style terms and triples."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

_VAR_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

STRING, INTEGER, DECIMAL = "string", "integer", "decimal"


@dataclass(frozen=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if not self.value:
            raise ValueError("empty IRI")

    def __str__(self) -> str:
        return f"<{self.value}>"


@dataclass(frozen=True)
class Literal:
    value: Union[str, int, float]
    datatype: str = STRING

    def __post_init__(self) -> None:
        expected = {STRING: str, INTEGER: int, DECIMAL: float}.get(self.datatype)
        if expected is None:
            raise ValueError(f"unknown datatype {self.datatype!r}")
        if type(self.value) is not expected:
            raise TypeError(f"{self.datatype} literal needs a {expected.__name__}, got {self.value!r}")
        if self.datatype == DECIMAL and not math.isfinite(self.value):
            raise ValueError("decimal literals must be finite")

    @classmethod
    def of(cls, value: Union[str, int, float]) -> "Literal":
        if isinstance(value, bool):
            raise TypeError("boolean literals are not supported")
        if isinstance(value, int):
            return cls(value, INTEGER)
        if isinstance(value, float):
            return cls(value, DECIMAL)
        return cls(value, STRING)

    @property
    def numeric(self) -> bool:
        return self.datatype != STRING

    def __str__(self) -> str:
        if self.datatype == STRING:
            escaped = (self.value.replace("\\", "\\\\").replace('"', '\\"')
                       .replace("\n", "\\n").replace("\t", "\\t"))
            return f'"{escaped}"'
        return repr(self.value)


@dataclass(frozen=True)
class Variable:
    name: str

    def __post_init__(self) -> None:
        if not _VAR_NAME.match(self.name):
            raise ValueError(f"bad variable name {self.name!r}")

    def __str__(self) -> str:
        return f"?{self.name}"


Term = Union[Iri, Literal, Variable]
Node = Union[Iri, Literal]


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Node

    def __post_init__(self) -> None:
        if not isinstance(self.subject, Iri) or not isinstance(self.predicate, Iri):
            raise TypeError("subject and predicate must be IRIs")
        if not isinstance(self.object, (Iri, Literal)):
            raise TypeError("object must be an IRI or a literal")

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def __str__(self) -> str:
        return f"{self.subject} {self.predicate} {self.object}"


def term_sort_key(term: Node) -> tuple:
    """Total order used by ORDER BY: IRIs, then numbers, then strings."""
    if isinstance(term, Iri):
        return (0, term.value)
    if term.numeric:
        return (1, term.value)
    return (2, term.value)
