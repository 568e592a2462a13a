"""Core graph model: IRIs, entity references, literals, mentions, triples.

The module also owns N-Triples serialization. Output is canonical in the
sense that the same graph always produces the same bytes: one line per
triple, lexicographically sorted, UTF-8 with ``\\n`` line endings.
"""

import re
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Tuple, Union

WIKIDATA_ENTITY_NS = "http://www.wikidata.org/entity/"
WIKIDATA_PROPERTY_NS = "http://www.wikidata.org/prop/direct/"

XSD_NS = "http://www.w3.org/2001/XMLSchema#"
XSD_STRING = XSD_NS + "string"
XSD_INTEGER = XSD_NS + "integer"
XSD_DECIMAL = XSD_NS + "decimal"
XSD_DATE = XSD_NS + "date"
XSD_TIME = XSD_NS + "time"
XSD_DATETIME = XSD_NS + "dateTime"

NUMERIC = "numeric"
TEMPORAL = "temporal"

#: The 18 OntoNotes entity classes plus the open noun-phrase class.
ONTONOTES_TYPES = frozenset({
    "PERSON", "NORP", "FAC", "ORG", "GPE", "LOC", "PRODUCT", "EVENT",
    "WORK_OF_ART", "LAW", "LANGUAGE", "DATE", "TIME", "PERCENT", "MONEY",
    "QUANTITY", "ORDINAL", "CARDINAL",
})
MENTION_TYPES = ONTONOTES_TYPES | {"CONCEPT"}

# Characters an IRI reference may not contain, per the N-Triples grammar.
_IRI_FORBIDDEN = set('<>"{}|^`\\') | {chr(c) for c in range(0x21)}
_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


class SerializationError(ValueError):
    """A graph contains a term that cannot be written as N-Triples."""


class NTriplesParseError(ValueError):
    """Input rejected by the N-Triples reader."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def is_valid_iri(value: str) -> bool:
    """True if ``value`` has a scheme and no character forbidden in IRI refs."""
    if not value or not _SCHEME_RE.match(value):
        return False
    return not any(c in _IRI_FORBIDDEN for c in value)


@dataclass(frozen=True, order=True)
class Iri:
    value: str

    def __post_init__(self):
        if not is_valid_iri(self.value):
            raise ValueError(f"invalid IRI: {self.value!r}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EntityRef:
    """Reference to a knowledge-base entity or property.

    ``iri`` is None for entities the user chose to leave unlinked; those are
    exported as blank nodes. ``span`` anchors an unlinked reference to its
    source mention, and ``blank`` carries the blank-node label once the
    reference has entered a graph.
    """

    iri: Optional[Iri]
    label: str = ""
    description: str = ""
    span: Optional[Tuple[int, int]] = None
    blank: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "description", self.description.strip())

    @property
    def is_linked(self) -> bool:
        return self.iri is not None

    def node_key(self) -> Tuple:
        """Identity of the node, independent of label/description metadata."""
        if self.iri is not None:
            return ("iri", self.iri.value)
        if self.blank is not None:
            return ("blank", self.blank)
        if self.span is not None:
            return ("span", self.span[0], self.span[1])
        return ("surface", self.label)


@dataclass(frozen=True)
class LiteralValue:
    """A typed RDF literal.

    ``kind`` records which family of source mention produced the value.
    Numeric literals normally carry xsd:integer or xsd:decimal and temporal
    ones xsd:date/xsd:time/xsd:dateTime, but both kinds fall back to
    xsd:string with the raw surface when parsing fails.
    """

    kind: str
    lexical: str
    datatype: Iri

    def __post_init__(self):
        if self.kind not in (NUMERIC, TEMPORAL):
            raise ValueError(f"unknown literal kind: {self.kind!r}")

    def value_key(self) -> Tuple:
        # kind is presentation metadata; identity is lexical form + datatype.
        return ("literal", self.lexical, self.datatype.value)


@dataclass(frozen=True)
class Mention:
    """A span of source text recognized as a potential entity."""

    start: int
    end: int
    surface: str
    etype: str
    source: str = ""

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad mention span [{self.start}, {self.end})")
        if self.etype not in MENTION_TYPES:
            raise ValueError(f"unknown mention type: {self.etype!r}")

    @property
    def span(self) -> Tuple[int, int]:
        return (self.start, self.end)

    def check_against(self, text: str) -> None:
        if self.end > len(text) or text[self.start:self.end] != self.surface:
            raise ValueError(
                f"mention [{self.start}, {self.end}) does not match text"
            )


Provenance = Tuple[Tuple[int, int], Tuple[int, int]]


@dataclass(frozen=True, eq=False)
class Triple:
    """Subject/predicate/object statement with optional mention provenance.

    Equality and hashing use :meth:`key`, i.e. node identity only, so two
    triples that differ in labels or provenance but agree on terms are the
    same statement.
    """

    subject: EntityRef
    predicate: EntityRef
    object: Union[EntityRef, LiteralValue]
    provenance: Optional[Provenance] = None

    def __post_init__(self):
        if isinstance(self.subject, LiteralValue):
            raise ValueError("triple subject must be an entity reference")
        if not isinstance(self.predicate, EntityRef) or not self.predicate.is_linked:
            raise ValueError("triple predicate must carry a property IRI")

    def key(self) -> Tuple:
        if isinstance(self.object, LiteralValue):
            okey = self.object.value_key()
        else:
            okey = self.object.node_key()
        return (self.subject.node_key(), self.predicate.node_key(), okey)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Triple):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())


class KnowledgeGraph:
    """An editable set of triples plus the mentions they were built from.

    Unlinked references get a stable blank-node label when their triple is
    added: the initial batch is numbered in mention order (earliest span
    first), later additions take the next free number. Duplicate statements
    (same subject/predicate/object identity) collapse to one entry.
    """

    def __init__(self, source_text: str = "", triples: Iterable[Triple] = (),
                 mentions: Iterable = ()):
        self.source_text = source_text
        self.mentions = list(mentions)
        self._triples: Dict[Tuple, Triple] = {}
        self._blank_labels: Dict[Tuple, str] = {}
        self._next_blank = 0
        batch = list(triples)
        for anchor in self._batch_anchors(batch):
            self._ensure_blank(anchor)
        for t in batch:
            self.add(t)

    @staticmethod
    def _anchor(ref: EntityRef) -> Tuple:
        """Pre-assignment identity of an unlinked reference."""
        if ref.blank is not None:
            return ("blank", ref.blank)
        if ref.span is not None:
            return ("span", ref.span[0], ref.span[1])
        return ("surface", ref.label)

    def _batch_anchors(self, batch: List[Triple]) -> List[Tuple]:
        anchors = []
        for t in batch:
            for ref in (t.subject, t.object):
                if isinstance(ref, EntityRef) and not ref.is_linked \
                        and ref.blank is None:
                    a = self._anchor(ref)
                    if a not in anchors:
                        anchors.append(a)
        # Mention order: spanned anchors by position, surface-only ones after.
        return sorted(anchors, key=lambda a: (a[0] != "span", a[1:]))

    def _ensure_blank(self, anchor: Tuple) -> str:
        if anchor[0] == "blank":
            label = anchor[1]
            if re.fullmatch(r"b\d+", label):
                self._next_blank = max(self._next_blank, int(label[1:]) + 1)
            return label
        if anchor not in self._blank_labels:
            self._blank_labels[anchor] = f"b{self._next_blank}"
            self._next_blank += 1
        return self._blank_labels[anchor]

    def _normalize_ref(self, ref: EntityRef) -> EntityRef:
        if ref.is_linked:
            return ref
        if ref.blank is not None:
            self._ensure_blank(("blank", ref.blank))  # reserve the number
            return ref
        return replace(ref, blank=self._ensure_blank(self._anchor(ref)))

    @property
    def triples(self) -> List[Triple]:
        return list(self._triples.values())

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple.key() in self._triples

    def add(self, triple: Triple) -> Triple:
        subject = self._normalize_ref(triple.subject)
        obj = triple.object
        if isinstance(obj, EntityRef):
            obj = self._normalize_ref(obj)
        normalized = replace(triple, subject=subject, object=obj)
        self._triples.setdefault(normalized.key(), normalized)
        return self._triples[normalized.key()]

    def remove(self, key: Tuple) -> Optional[Triple]:
        return self._triples.pop(key, None)

    def blank_for(self, span: Tuple[int, int]) -> Optional[str]:
        """Blank-node label assigned to the unlinked mention at ``span``."""
        return self._blank_labels.get(("span", span[0], span[1]))

    def find(self, key: Tuple) -> Optional[Triple]:
        return self._triples.get(key)


_ESCAPES = {
    "\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t",
    "\b": "\\b", "\f": "\\f",
}
_UNESCAPES = {v[1]: k for k, v in _ESCAPES.items()}


def _escape_literal(lexical: str) -> str:
    return "".join(_ESCAPES.get(c, c) for c in lexical)


def _iri_term(iri: Optional[Iri], triple: Triple, role: str) -> str:
    if iri is None or not is_valid_iri(iri.value):
        raise SerializationError(f"{role} of {triple!r} has no valid IRI")
    return f"<{iri.value}>"


def _node_term(ref: EntityRef, triple: Triple, role: str) -> str:
    if ref.is_linked:
        return _iri_term(ref.iri, triple, role)
    if ref.blank is None:
        raise SerializationError(
            f"{role} of {triple!r} is unlinked and has no blank-node label"
        )
    return f"_:{ref.blank}"


def to_ntriples(graph: KnowledgeGraph) -> str:
    """Serialize ``graph`` to canonical N-Triples text.

    Raises SerializationError naming the offending triple when a term
    cannot be written (invalid IRI, unlinked node without a label).
    """
    lines = []
    for t in graph.triples:
        s = _node_term(t.subject, t, "subject")
        p = _iri_term(t.predicate.iri, t, "predicate")
        if isinstance(t.object, LiteralValue):
            o = f'"{_escape_literal(t.object.lexical)}"^^' \
                f"{_iri_term(t.object.datatype, t, 'object datatype')}"
        else:
            o = _node_term(t.object, t, "object")
        lines.append(f"{s} {p} {o} .")
    if not lines:
        return ""
    return "\n".join(sorted(lines)) + "\n"


_IRI_PAT = r"<([^\x00-\x20<>\"{}|^`\\]*)>"
_BLANK_PAT = r"_:([A-Za-z][A-Za-z0-9]*)"
_LITERAL_PAT = r'"((?:[^"\\\n\r]|\\.)*)"\^\^' + _IRI_PAT
_LINE_RE = re.compile(
    rf"^(?:{_IRI_PAT}|{_BLANK_PAT})\s+{_IRI_PAT}\s+"
    rf"(?:{_IRI_PAT}|{_BLANK_PAT}|{_LITERAL_PAT})\s+\.$"
)


def _unescape_literal(raw: str, line_no: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= len(raw):
            raise NTriplesParseError("dangling escape in literal", line_no)
        nxt = raw[i + 1]
        if nxt in _UNESCAPES:
            out.append(_UNESCAPES[nxt])
            i += 2
        elif nxt in ("u", "U"):
            width = 4 if nxt == "u" else 8
            hexpart = raw[i + 2:i + 2 + width]
            if len(hexpart) != width:
                raise NTriplesParseError("truncated unicode escape", line_no)
            try:
                out.append(chr(int(hexpart, 16)))
            except ValueError:
                raise NTriplesParseError("bad unicode escape", line_no) from None
            i += 2 + width
        else:
            raise NTriplesParseError(f"unknown escape \\{nxt}", line_no)
    return "".join(out)


def _literal_kind(datatype: str) -> str:
    if datatype in (XSD_INTEGER, XSD_DECIMAL):
        return NUMERIC
    return TEMPORAL


def from_ntriples(text: str) -> KnowledgeGraph:
    """Parse the subset of N-Triples produced by :func:`to_ntriples`.

    Raises NTriplesParseError with a 1-based line number on bad input.
    Blank lines are tolerated; labels and descriptions are not part of the
    format, so parsed references carry empty ones.
    """
    triples = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        m = _LINE_RE.match(line)
        if m is None:
            if not line.rstrip().endswith("."):
                raise NTriplesParseError("missing terminal ' .'", line_no)
            raise NTriplesParseError("malformed triple", line_no)
        (s_iri, s_blank, p_iri,
         o_iri, o_blank, o_lex, o_dt) = m.groups()
        try:
            subject = (EntityRef(iri=Iri(s_iri)) if s_iri is not None
                       else EntityRef(iri=None, blank=s_blank))
            predicate = EntityRef(iri=Iri(p_iri))
            obj: Union[EntityRef, LiteralValue]
            if o_lex is not None:
                obj = LiteralValue(
                    kind=_literal_kind(o_dt),
                    lexical=_unescape_literal(o_lex, line_no),
                    datatype=Iri(o_dt),
                )
            elif o_iri is not None:
                obj = EntityRef(iri=Iri(o_iri))
            else:
                obj = EntityRef(iri=None, blank=o_blank)
            triples.append(Triple(subject=subject, predicate=predicate, object=obj))
        except ValueError as exc:
            if isinstance(exc, NTriplesParseError):
                raise
            raise NTriplesParseError(str(exc), line_no) from exc
    return KnowledgeGraph(source_text="", triples=triples)
