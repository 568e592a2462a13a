"""Entity discovery: mention recognition, literal parsing, candidate linking.

Recognizer backends produce mentions; outputs from several backends are
merged (identical spans resolve to the highest-priority backend, overlaps to
the longer span). Mentions with numeric/temporal types become literals,
everything else is linked against the entity index and reranked by the
similarity between the mention's sentence and each candidate's descriptive
sentence.
"""

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .index import EntityRecord, RetrievalConfig, ScoredCandidate, SearchIndex
from .model import (
    EntityRef,
    Iri,
    LiteralValue,
    Mention,
    NUMERIC,
    TEMPORAL,
    XSD_DATE,
    XSD_DATETIME,
    XSD_DECIMAL,
    XSD_INTEGER,
    XSD_STRING,
    XSD_TIME,
)

logger = logging.getLogger(__name__)

NUMERIC_TYPES = frozenset({"PERCENT", "MONEY", "QUANTITY", "CARDINAL",
                           "ORDINAL"})
TEMPORAL_TYPES = frozenset({"DATE", "TIME"})
LITERAL_TYPES = NUMERIC_TYPES | TEMPORAL_TYPES

LINKABLE = "linkable"

KIND_LINKED = "linked"
KIND_LITERAL = "literal"
KIND_UNLINKED = "unlinked"


def classify_mention(mention: Mention) -> str:
    """Literal family for the seven literal types, otherwise linkable."""
    if mention.etype in NUMERIC_TYPES:
        return NUMERIC
    if mention.etype in TEMPORAL_TYPES:
        return TEMPORAL
    return LINKABLE


@dataclass
class LinkedMention:
    """A mention after resolution.

    kind is "linked" (candidates non-empty, ``selected`` indexes into them),
    "literal" (carries a LiteralValue), or "unlinked" (nothing retrieved or
    the user chose to keep it unlinked).
    """

    mention: Mention
    kind: str
    candidates: List[ScoredCandidate] = field(default_factory=list)
    selected: int = 0
    literal: Optional[LiteralValue] = None

    def __post_init__(self):
        if self.kind == KIND_LINKED:
            if not self.candidates:
                raise ValueError("linked mention needs candidates")
            if not 0 <= self.selected < len(self.candidates):
                raise ValueError("selected index out of range")
        elif self.kind == KIND_LITERAL:
            if self.literal is None:
                raise ValueError("literal mention needs a literal value")
            if self.mention.etype not in LITERAL_TYPES:
                raise ValueError(
                    f"type {self.mention.etype} cannot carry a literal")
        elif self.kind != KIND_UNLINKED:
            raise ValueError(f"unknown resolution kind: {self.kind!r}")

    @property
    def span(self) -> Tuple[int, int]:
        return self.mention.span

    def selected_candidate(self) -> ScoredCandidate:
        return self.candidates[self.selected]

    def entity_ref(self):
        if self.kind == KIND_LINKED:
            return self.selected_candidate().record.to_ref()
        if self.kind == KIND_UNLINKED:
            return EntityRef(iri=None, label=self.mention.surface,
                             span=self.mention.span)
        raise ValueError("literal mentions have no entity reference")


# ---------------------------------------------------------------------------
# Recognizer backends


def _is_word_boundary(text: str, start: int, end: int) -> bool:
    before_ok = start == 0 or not text[start - 1].isalnum()
    after_ok = end == len(text) or not text[end].isalnum()
    return before_ok and after_ok


@dataclass(frozen=True)
class GazetteerEntry:
    surface: str
    etype: str
    preferred_iri: Optional[str] = None


class GazetteerRecognizer:
    """Dictionary lookup over known surfaces.

    Matching is greedy longest-match left to right: one case-sensitive pass,
    then a case-insensitive pass over the regions the first pass left
    uncovered. Matches must sit on word boundaries.

    The gazetteer file format is tab-separated:
    ``surface<TAB>type<TAB>optional-preferred-IRI``.
    """

    backend_id = "gazetteer"

    def __init__(self, entries: Iterable[GazetteerEntry]):
        self.entries = sorted(entries, key=lambda e: (-len(e.surface),
                                                      e.surface))

    @classmethod
    def from_file(cls, path) -> "GazetteerRecognizer":
        entries = []
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) < 2:
                    logger.warning("gazetteer line %d has no type, skipped",
                                   line_no)
                    continue
                entries.append(GazetteerEntry(
                    surface=parts[0],
                    etype=parts[1],
                    preferred_iri=parts[2] if len(parts) > 2 and parts[2]
                    else None,
                ))
        return cls(entries)

    def _find_all(self, text: str, case_sensitive: bool):
        haystack = text if case_sensitive else text.lower()
        for entry in self.entries:
            needle = entry.surface if case_sensitive else entry.surface.lower()
            if not needle:
                continue
            pos = haystack.find(needle)
            while pos != -1:
                end = pos + len(needle)
                if _is_word_boundary(text, pos, end):
                    yield (pos, end, entry)
                pos = haystack.find(needle, pos + 1)

    @staticmethod
    def _select(matches, taken: List[Tuple[int, int]]):
        chosen = []
        # Longest span first; ties by position so the sweep is greedy
        # left-to-right.
        for start, end, entry in sorted(matches,
                                        key=lambda m: (-(m[1] - m[0]), m[0])):
            if any(s < end and start < e for s, e in taken):
                continue
            taken.append((start, end))
            chosen.append((start, end, entry))
        return chosen

    def recognize(self, text: str) -> List[Mention]:
        taken: List[Tuple[int, int]] = []
        chosen = self._select(self._find_all(text, case_sensitive=True), taken)
        chosen += self._select(self._find_all(text, case_sensitive=False),
                               taken)
        mentions = [Mention(start=s, end=e, surface=text[s:e],
                            etype=entry.etype, source=self.backend_id)
                    for s, e, entry in chosen]
        mentions.sort(key=lambda m: (m.start, m.end))
        return mentions


class ConceptRecognizer:
    """Finds bare noun phrases over small closed word lists.

    A phrase is an optional determiner, any number of listed adjectives and
    one or more listed nouns; the emitted span excludes the determiner and
    is typed CONCEPT.
    """

    backend_id = "concepts"

    DETERMINERS = ("a", "an", "the", "this", "that", "these", "those")
    ADJECTIVES = ("famous", "historic", "public", "private", "large", "small",
                  "old", "new", "major", "academic", "german")
    NOUNS = ("city", "country", "state", "capital", "town", "university",
             "school", "museum", "architect", "artist", "painter", "region",
             "building", "company", "institution")

    def __init__(self, nouns: Sequence[str] = NOUNS,
                 adjectives: Sequence[str] = ADJECTIVES,
                 determiners: Sequence[str] = DETERMINERS):
        if not nouns:
            raise ValueError("concept recognizer needs at least one noun")
        det = "|".join(re.escape(w) for w in determiners)
        adj = "|".join(re.escape(w) for w in adjectives)
        noun = "|".join(re.escape(w) for w in nouns)
        phrase = rf"(?:(?:{adj})\s+)*(?:{noun})(?:\s+(?:{noun}))*"
        self._re = re.compile(
            rf"\b(?:(?:{det})\s+)?({phrase})\b", re.IGNORECASE)

    def recognize(self, text: str) -> List[Mention]:
        mentions = []
        for m in self._re.finditer(text):
            start, end = m.span(1)
            mentions.append(Mention(start=start, end=end,
                                    surface=text[start:end],
                                    etype="CONCEPT",
                                    source=self.backend_id))
        return mentions


def merge_mentions(per_backend: Sequence[Sequence[Mention]]) -> List[Mention]:
    """Merge recognizer outputs into one non-overlapping mention list.

    Backend order is priority order: identical spans keep the first
    backend's typing; overlapping non-identical spans resolve to the longer
    one (ties to the earlier start).
    """
    by_span = {}
    for priority, mentions in enumerate(per_backend):
        for m in mentions:
            key = (m.start, m.end)
            if key not in by_span or priority < by_span[key][0]:
                by_span[key] = (priority, m)
    pooled = [m for _p, m in by_span.values()]
    pooled.sort(key=lambda m: (-(m.end - m.start), m.start,
                               by_span[(m.start, m.end)][0]))
    merged: List[Mention] = []
    for m in pooled:
        if any(o.start < m.end and m.start < o.end for o in merged):
            continue
        merged.append(m)
    merged.sort(key=lambda m: (m.start, m.end))
    return merged


def recognize_all(text: str, backends: Sequence) -> List[Mention]:
    """Run all recognizers and merge. A failing backend contributes nothing."""
    per_backend = []
    for backend in backends:
        try:
            mentions = list(backend.recognize(text))
            for m in mentions:
                m.check_against(text)
        except Exception:
            name = getattr(backend, "backend_id", type(backend).__name__)
            logger.warning("recognizer %s failed, ignoring its output", name,
                           exc_info=True)
            mentions = []
        per_backend.append(mentions)
    return merge_mentions(per_backend)


# ---------------------------------------------------------------------------
# Literal parsing

_CURRENCY_CHARS = "$€£¥₹¢"
_ISO_DATE_RE = re.compile(r"(\d{4})-(\d{1,2})-(\d{1,2})$")
_ISO_DATETIME_RE = re.compile(
    r"(\d{4})-(\d{1,2})-(\d{1,2})[T ](\d{1,2}):(\d{2})(?::(\d{2}))?$")
_TIME_RE = re.compile(r"(\d{1,2}):(\d{2})(?::(\d{2}))?$")
_YEAR_RE = re.compile(r"\d{4}$")
_MONTHS = {name: i + 1 for i, name in enumerate(
    ("january", "february", "march", "april", "may", "june", "july",
     "august", "september", "october", "november", "december"))}
_TEXT_DATE_RES = (
    # April 1, 1919  /  April 1 1919
    re.compile(r"([A-Za-z]+)\s+(\d{1,2}),?\s+(\d{4})$"),
    # 1 April 1919
    re.compile(r"(\d{1,2})\s+([A-Za-z]+)\s+(\d{4})$"),
)


def _parse_numeric(surface: str) -> Optional[LiteralValue]:
    cleaned = surface.strip()
    for c in _CURRENCY_CHARS + "%":
        cleaned = cleaned.replace(c, "")
    cleaned = cleaned.replace(",", "").replace(" ", "")
    if not cleaned:
        return None
    try:
        value = int(cleaned)
        return LiteralValue(kind=NUMERIC, lexical=str(value),
                            datatype=Iri(XSD_INTEGER))
    except ValueError:
        pass
    try:
        float(cleaned)
    except ValueError:
        return None
    return LiteralValue(kind=NUMERIC, lexical=cleaned,
                        datatype=Iri(XSD_DECIMAL))


def _valid_date(year: int, month: int, day: int) -> bool:
    import datetime
    try:
        datetime.date(year, month, day)
        return True
    except ValueError:
        return False


def _parse_temporal(surface: str) -> Optional[LiteralValue]:
    s = surface.strip()
    if _YEAR_RE.fullmatch(s):
        return LiteralValue(kind=TEMPORAL, lexical=s, datatype=Iri(XSD_DATE))
    m = _ISO_DATETIME_RE.fullmatch(s)
    if m:
        y, mo, d, h, mi, sec = (int(g) if g else 0 for g in m.groups())
        if _valid_date(y, mo, d) and h < 24 and mi < 60 and sec < 60:
            return LiteralValue(
                kind=TEMPORAL,
                lexical=f"{y:04d}-{mo:02d}-{d:02d}T{h:02d}:{mi:02d}:{sec:02d}",
                datatype=Iri(XSD_DATETIME))
        return None
    m = _ISO_DATE_RE.fullmatch(s)
    if m:
        y, mo, d = (int(g) for g in m.groups())
        if _valid_date(y, mo, d):
            return LiteralValue(kind=TEMPORAL,
                                lexical=f"{y:04d}-{mo:02d}-{d:02d}",
                                datatype=Iri(XSD_DATE))
        return None
    for pattern in _TEXT_DATE_RES:
        m = pattern.fullmatch(s)
        if not m:
            continue
        groups = m.groups()
        if groups[0].isdigit():
            day, month_name, year = groups
        else:
            month_name, day, year = groups
        month = _MONTHS.get(month_name.lower())
        if month and _valid_date(int(year), month, int(day)):
            return LiteralValue(
                kind=TEMPORAL,
                lexical=f"{int(year):04d}-{month:02d}-{int(day):02d}",
                datatype=Iri(XSD_DATE))
    m = _TIME_RE.fullmatch(s)
    if m:
        h, mi, sec = (int(g) if g else 0 for g in m.groups())
        if h < 24 and mi < 60 and sec < 60:
            return LiteralValue(kind=TEMPORAL,
                                lexical=f"{h:02d}:{mi:02d}:{sec:02d}",
                                datatype=Iri(XSD_TIME))
    return None


def parse_literal(mention: Mention, kind: str) -> LiteralValue:
    """Literal for a numeric or temporal mention; xsd:string on failure."""
    parsed = (_parse_numeric(mention.surface) if kind == NUMERIC
              else _parse_temporal(mention.surface))
    if parsed is not None:
        return parsed
    return LiteralValue(kind=kind, lexical=mention.surface,
                        datatype=Iri(XSD_STRING))


# ---------------------------------------------------------------------------
# Sentences and reranking

_SENTENCE_BREAK_RE = re.compile(r"[.!?]+(?=\s)")


def split_sentences(text: str) -> List[Tuple[int, int]]:
    """Sentence spans; breaks after ./!/? followed by whitespace."""
    spans = []
    start = 0
    for m in _SENTENCE_BREAK_RE.finditer(text):
        end = m.end()
        spans.append((start, end))
        start = end
    if start < len(text):
        spans.append((start, len(text)))
    if not spans:
        spans.append((0, 0))
    return spans


def context_sentence(text: str, mention: Mention) -> str:
    """The sentence of ``text`` containing the mention's start offset."""
    for s, e in split_sentences(text):
        if s <= mention.start < e:
            return text[s:e].strip()
    return text.strip()


def descriptive_sentence(record: EntityRecord) -> str:
    """"<label> is a <description>", or the label alone when undescribed."""
    if record.description:
        return f"{record.label} is a {record.description}"
    return record.label


_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class HashedTrigramEmbedder:
    """Character-trigram bag hashed into a fixed-size signed vector.

    Deterministic and dependency-free: each lowercased trigram is folded to
    an integer, mixed, and adds +-1 to one of ``dim`` buckets; the result is
    L2-normalized. Inputs shorter than three characters embed to the zero
    vector.
    """

    backend_id = "hashed-trigram"

    def __init__(self, dim: int = 256):
        self.dim = dim

    def embed(self, sentence: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        s = sentence.lower()
        for i in range(len(s) - 2):
            seed = 0
            for byte in s[i:i + 3].encode("utf-8"):
                seed = (seed * 31 + byte) & _MASK64
            mixed = _splitmix64(seed)
            bucket = mixed % self.dim
            sign = 1.0 if (mixed >> 8) & 1 else -1.0
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def rerank(candidates: Sequence[ScoredCandidate], context: str,
           embedder) -> List[ScoredCandidate]:
    """Reorder candidates by context similarity.

    New score = max(0, cosine) * (retrieval score / max retrieval score),
    so scores land in [0, 1] and the candidate set is preserved. If the
    embedder fails the original ranking is returned unchanged.
    """
    if not candidates:
        return []
    try:
        ctx_vec = embedder.embed(context)
        cand_vecs = [embedder.embed(descriptive_sentence(c.record))
                     for c in candidates]
    except Exception:
        name = getattr(embedder, "backend_id", type(embedder).__name__)
        logger.warning("embedder %s failed, keeping retrieval order", name,
                       exc_info=True)
        return list(candidates)
    max_score = max(c.score for c in candidates)
    rescored = []
    for c, vec in zip(candidates, cand_vecs):
        sim = max(0.0, cosine(vec, ctx_vec))
        norm = c.score / max_score if max_score > 0 else 0.0
        rescored.append(replace(c, score=sim * norm))
    rescored.sort(key=lambda c: (-c.score, c.record.iri))
    return rescored


def discover(text: str, recognizers: Sequence, embedder,
             index: SearchIndex, config: RetrievalConfig,
             rerank_enabled: bool = True) -> List[LinkedMention]:
    """Recognize, classify and link all mentions of ``text``.

    Output is ordered by mention start and non-overlapping. Linkable
    mentions with no candidate above threshold come back unlinked.
    """
    resolved = []
    for mention in recognize_all(text, recognizers):
        kind = classify_mention(mention)
        if kind in (NUMERIC, TEMPORAL):
            resolved.append(LinkedMention(
                mention=mention, kind=KIND_LITERAL,
                literal=parse_literal(mention, kind)))
            continue
        candidates = index.search(mention.surface, config)
        if candidates and rerank_enabled:
            candidates = rerank(candidates, context_sentence(text, mention),
                                embedder)
        if candidates:
            resolved.append(LinkedMention(mention=mention, kind=KIND_LINKED,
                                          candidates=candidates, selected=0))
        else:
            resolved.append(LinkedMention(mention=mention,
                                          kind=KIND_UNLINKED))
    return resolved
