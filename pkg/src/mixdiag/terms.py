"""RDF-style terms: IRIs over a fixed prefix table, typed literals, triples.

The graph layer works with absolute IRIs internally.  All vocabularies the
package emits live under one of the namespaces below; the table is closed on
purpose so that prefixed names round-trip unambiguously through N-Triples,
query JSON, and report text.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MixdiagError

PREFIXES: dict[str, str] = {
    "ex": "http://example.org/mixing-plant#",
    "vdi3682": "http://example.org/vocab/vdi3682#",
    "isa88": "http://example.org/vocab/isa88#",
    "sosa": "http://www.w3.org/ns/sosa/",
    "din61360": "http://example.org/vocab/din61360#",
    "iso17359": "http://example.org/vocab/iso17359#",
    "sm": "http://example.org/vocab/state-machine#",
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
}

# Longest namespaces first so compaction picks the most specific prefix.
_BY_NAMESPACE = sorted(PREFIXES.items(), key=lambda kv: -len(kv[1]))


@dataclass(frozen=True)
class Iri:
    """An absolute IRI."""

    value: str

    @classmethod
    def from_prefixed(cls, name: str) -> "Iri":
        prefix, sep, local = name.partition(":")
        if not sep:
            raise MixdiagError(f"not a prefixed name: {name!r}")
        try:
            return cls(PREFIXES[prefix] + local)
        except KeyError:
            raise MixdiagError(f"unknown prefix {prefix!r} in {name!r}") from None

    def prefixed(self) -> str | None:
        """Compact form like ``ex:B201``, or None if no prefix matches."""
        for prefix, ns in _BY_NAMESPACE:
            if self.value.startswith(ns):
                return f"{prefix}:{self.value[len(ns):]}"
        return None

    def __str__(self) -> str:
        return self.prefixed() or f"<{self.value}>"


def iri(name: str) -> Iri:
    """Build an Iri from a prefixed name or an ``<absolute>`` form."""
    if name.startswith("<") and name.endswith(">"):
        return Iri(name[1:-1])
    return Iri.from_prefixed(name)


XSD_STRING = iri("xsd:string")
XSD_DOUBLE = iri("xsd:double")
XSD_BOOLEAN = iri("xsd:boolean")
XSD_INTEGER = iri("xsd:integer")

RDF_TYPE = iri("rdf:type")
RDFS_SUBCLASS_OF = iri("rdfs:subClassOf")
RDFS_LABEL = iri("rdfs:label")

_NUMERIC_DATATYPES = {XSD_DOUBLE, XSD_INTEGER}


@dataclass(frozen=True)
class Literal:
    """A typed literal with a canonical lexical form."""

    lexical: str
    datatype: Iri

    @classmethod
    def string(cls, value: str) -> "Literal":
        return cls(value, XSD_STRING)

    @classmethod
    def double(cls, value: float) -> "Literal":
        # repr is the shortest form that parses back to the same float,
        # which keeps "bit-exact" round trips honest.
        return cls(repr(float(value)), XSD_DOUBLE)

    @classmethod
    def boolean(cls, value: bool) -> "Literal":
        return cls("true" if value else "false", XSD_BOOLEAN)

    @classmethod
    def integer(cls, value: int) -> "Literal":
        return cls(str(int(value)), XSD_INTEGER)

    def is_numeric(self) -> bool:
        return self.datatype in _NUMERIC_DATATYPES

    def value(self):
        if self.datatype == XSD_DOUBLE:
            return float(self.lexical)
        if self.datatype == XSD_INTEGER:
            return int(self.lexical)
        if self.datatype == XSD_BOOLEAN:
            return self.lexical == "true"
        return self.lexical

    def __str__(self) -> str:
        return self.lexical


@dataclass(frozen=True)
class Var:
    """A query variable (stored without the leading ``?``)."""

    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


Term = Iri | Literal
PatternTerm = Iri | Literal | Var


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term

    def __str__(self) -> str:
        return f"({self.subject} {self.predicate} {self.object})"


def term_sort_key(term: Term) -> tuple:
    """Deterministic total order over terms.

    IRIs sort before literals; numeric literals sort numerically among
    themselves, everything else by lexical form.
    """
    if isinstance(term, Iri):
        return (0, 0.0, term.value)
    if term.is_numeric():
        return (1, float(term.lexical), term.lexical)
    if term.datatype == XSD_BOOLEAN:
        return (2, 0.0 if term.lexical == "false" else 1.0, term.lexical)
    return (3, 0.0, term.lexical)


def format_term(term: Term) -> str:
    """Human-oriented rendering used in reports and validation output."""
    if isinstance(term, Iri):
        return str(term)
    return term.lexical


def term_to_jsonable(term: PatternTerm):
    """Encode a term for query / catalog JSON documents."""
    if isinstance(term, Var):
        return f"?{term.name}"
    if isinstance(term, Iri):
        return term.prefixed() or f"<{term.value}>"
    return {"lexical": term.lexical, "datatype": str(term.datatype)}


def term_from_jsonable(raw) -> PatternTerm:
    """Decode a term from query / catalog JSON.

    Strings starting with ``?`` are variables, ``<...>`` absolute IRIs,
    strings containing ``:`` prefixed names, and anything else a plain
    string literal.  Numbers and booleans map to xsd literals; the explicit
    ``{"lexical": ..., "datatype": ...}`` form covers the rest.  Already
    constructed terms pass through unchanged.
    """
    if isinstance(raw, (Iri, Literal, Var)):
        return raw
    if isinstance(raw, bool):
        return Literal.boolean(raw)
    if isinstance(raw, int):
        return Literal.integer(raw)
    if isinstance(raw, float):
        return Literal.double(raw)
    if isinstance(raw, str):
        if raw.startswith("?"):
            if len(raw) < 2:
                raise MixdiagError("empty variable name")
            return Var(raw[1:])
        if raw.startswith("<") and raw.endswith(">"):
            return Iri(raw[1:-1])
        if ":" in raw:
            return Iri.from_prefixed(raw)
        return Literal.string(raw)
    if isinstance(raw, dict):
        try:
            datatype = raw["datatype"]
            lexical = raw["lexical"]
        except KeyError as exc:
            raise MixdiagError(f"literal object missing key: {exc}") from None
        dt = iri(datatype) if isinstance(datatype, str) else datatype
        return Literal(str(lexical), dt)
    raise MixdiagError(f"cannot interpret term: {raw!r}")
