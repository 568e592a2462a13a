"""Relation extraction and predicate linking.

The reference extractor matches a table of surface templates against
recognized mention spans. Templates interleave literal text with slots:
``<X>`` is the subject, ``<Y>`` the object; any other slot name (``<NP>``,
``<Z>``, ...) must align with some mention but is only emitted as the object
when no ``<Y>`` is present. Example table entries::

    <X> is a <NP> in <Y>\tcountry
    <X> founded by <Y>\tfounded by
    <X> is a <NP>\tinstance of

Extracted predicates are linked against the property index by the same
retrieval used for entities, except the top hit is taken as-is (no
reranking). Relations whose predicate cannot be linked are dropped before
fusion.
"""

import logging
import re
from dataclasses import dataclass, replace
from itertools import product
from typing import List, Optional, Sequence, Tuple

from .discovery import recognize_all
from .index import EntityRecord, RetrievalConfig, SearchIndex

logger = logging.getLogger(__name__)

_SLOT_RE = re.compile(r"<([A-Za-z][A-Za-z0-9]*)>")


@dataclass(frozen=True)
class ExtractedRelation:
    """A predicate surface between two mention spans of the source text."""

    subject_span: Tuple[int, int]
    object_span: Tuple[int, int]
    predicate_surface: str
    linked_property: Optional[EntityRecord] = None

    def __post_init__(self):
        if self.subject_span == self.object_span:
            raise ValueError("subject and object spans must differ")

    def dedup_key(self) -> Tuple:
        return (self.subject_span, self.object_span, self.predicate_surface)


@dataclass(frozen=True)
class _Pattern:
    # parts alternate ("lit", text) / ("slot", name)
    parts: Tuple[Tuple[str, str], ...]
    predicate: str

    @property
    def slots(self) -> List[str]:
        return [value for kind, value in self.parts if kind == "slot"]


def _parse_template(template: str, predicate: str) -> _Pattern:
    parts: List[Tuple[str, str]] = []
    pos = 0
    for m in _SLOT_RE.finditer(template):
        if m.start() > pos:
            parts.append(("lit", template[pos:m.start()]))
        parts.append(("slot", m.group(1)))
        pos = m.end()
    if pos < len(template):
        parts.append(("lit", template[pos:]))
    slots = [v for k, v in parts if k == "slot"]
    if "X" not in slots:
        raise ValueError(f"template {template!r} has no <X> subject slot")
    if len(slots) != len(set(slots)):
        raise ValueError(f"template {template!r} repeats a slot")
    if len(slots) < 2:
        raise ValueError(f"template {template!r} needs a second slot")
    return _Pattern(parts=tuple(parts), predicate=predicate)


class PatternExtractor:
    """Template matching over recognized mentions.

    A template matches when its slots align exactly with mention spans and
    the text between consecutive slots equals the template's literal parts.
    Cross-sentence matches are impossible by construction since sentence
    punctuation never appears inside template literals.

    A match whose text region is strictly contained in another match's
    region is discarded, so the most specific template wins.
    """

    backend_id = "patterns"

    DEFAULT_TABLE = (
        ("<X> is a <NP> in <Y>", "country"),
        ("<X> is a <NP>", "instance of"),
        ("<X> was founded by <Y>", "founded by"),
        ("<X> founded by <Y>", "founded by"),
        ("<X> was founded in <Y>", "inception"),
        ("<X> founded in <Y>", "inception"),
        ("<X> is the capital of <Y>", "capital of"),
        ("<X> is located in <Y>", "located in"),
    )

    def __init__(self, recognizers: Sequence,
                 table: Sequence[Tuple[str, str]] = DEFAULT_TABLE):
        self.recognizers = list(recognizers)
        self.patterns = [_parse_template(t, p) for t, p in table]

    @classmethod
    def from_file(cls, path, recognizers: Sequence) -> "PatternExtractor":
        """Load a ``template<TAB>predicate-surface`` table."""
        table = []
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[1]:
                    logger.warning("pattern line %d malformed, skipped",
                                   line_no)
                    continue
                table.append((parts[0], parts[1]))
        return cls(recognizers, table)

    def _match_pattern(self, text: str, pattern: _Pattern, mentions):
        """Yield (region, slot assignment) for every exact stitch."""
        slot_names = pattern.slots
        for combo in product(mentions, repeat=len(slot_names)):
            spans = [m.span for m in combo]
            if len(set(spans)) != len(spans):
                continue
            assignment = dict(zip(slot_names, combo))
            cursor = None
            start = None
            ok = True
            for kind, value in pattern.parts:
                if kind == "slot":
                    m = assignment[value]
                    if cursor is None:
                        start = m.start
                    elif m.start != cursor:
                        ok = False
                        break
                    cursor = m.end
                else:
                    if cursor is None:
                        # leading literal: the region must begin with it
                        continue
                    if text[cursor:cursor + len(value)] != value:
                        ok = False
                        break
                    cursor += len(value)
            if not ok:
                continue
            # Leading literal (if any) must directly precede the first slot.
            first_kind, first_value = pattern.parts[0]
            if first_kind == "lit":
                lit_start = start - len(first_value)
                if lit_start < 0 or text[lit_start:start] != first_value:
                    continue
                start = lit_start
            yield (start, cursor), assignment

    def extract(self, text: str) -> List[ExtractedRelation]:
        mentions = recognize_all(text, self.recognizers)
        if not mentions:
            return []
        raw = []
        for pattern in self.patterns:
            for region, assignment in self._match_pattern(text, pattern,
                                                          mentions):
                subject = assignment["X"]
                obj = assignment.get("Y") or assignment.get("NP")
                if obj is None:
                    continue
                raw.append((region, ExtractedRelation(
                    subject_span=subject.span,
                    object_span=obj.span,
                    predicate_surface=pattern.predicate)))
        kept = []
        for region, rel in raw:
            contained = any(
                (o_start <= region[0] and region[1] <= o_end and
                 (o_start, o_end) != region)
                for (o_start, o_end), _other in raw)
            if not contained:
                kept.append(rel)
        return kept


def extract(text: str, backend) -> List[ExtractedRelation]:
    """Run a relation extractor defensively and drop duplicate relations."""
    try:
        relations = list(backend.extract(text))
    except Exception:
        name = getattr(backend, "backend_id", type(backend).__name__)
        logger.warning("relation extractor %s failed, no relations", name,
                       exc_info=True)
        return []
    seen = set()
    unique = []
    for rel in relations:
        if rel.dedup_key() in seen:
            continue
        seen.add(rel.dedup_key())
        unique.append(rel)
    return unique


def link_relation(predicate_surface: str, property_index: SearchIndex,
                  config: RetrievalConfig) -> Optional[EntityRecord]:
    """Best property for a predicate surface, or None below threshold.

    Property retrieval reuses the entity ranking but takes the top hit
    directly; reranking adds nothing for predicates.
    """
    hits = property_index.search(predicate_surface, config)
    return hits[0].record if hits else None


def extract_and_link(text: str, backend, property_index: SearchIndex,
                     config: RetrievalConfig) -> List[ExtractedRelation]:
    """Extract relations and attach linked properties where possible."""
    linked = []
    for rel in extract(text, backend):
        record = link_relation(rel.predicate_surface, property_index, config)
        if record is None:
            logger.info("predicate %r not linkable, relation dropped",
                        rel.predicate_surface)
        linked.append(replace(rel, linked_property=record))
    return linked
