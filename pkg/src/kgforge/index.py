"""Entity and property retrieval: dump ingestion, BM25 ranking, persistence.

A dump is line-delimited JSON, one record per line::

    {"id": "Q183", "label": "Germany", "description": "...",
     "aliases": ["FRG"], "outgoing": [{"property": "P17", "target": "Q183"}],
     "category": false, "disambiguation": false, "commonness_override": 99}

Bare ids are expanded against the configured namespaces. Records survive
ingestion only if the expanded id is a valid IRI, they have at least one
outgoing property, and they are neither categories nor disambiguation pages.
Commonness is the in-degree over the kept statement set unless a record
carries ``commonness_override``.
"""

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

from .model import (
    EntityRef,
    Iri,
    LiteralValue,
    WIKIDATA_ENTITY_NS,
    WIKIDATA_PROPERTY_NS,
    is_valid_iri,
)

logger = logging.getLogger(__name__)

INDEX_FORMAT = "kgforge-index/1"

# Filter rule names, in the order violations are counted.
RULE_INVALID_IRI = "invalid_iri"
RULE_NO_PROPERTIES = "no_properties"
RULE_CATEGORY = "category"
RULE_DISAMBIGUATION = "disambiguation"
FILTER_RULES = (RULE_INVALID_IRI, RULE_NO_PROPERTIES, RULE_CATEGORY,
                RULE_DISAMBIGUATION)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_ENTITY_ID_RE = re.compile(r"Q\d+")


def tokenize(text: str) -> List[str]:
    """Lowercased alphanumeric tokens, Unicode-aware."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class RetrievalConfig:
    """Knobs for candidate retrieval.

    ``alpha`` weights label matches over search-key matches and must stay
    above 1 so an exact label hit cannot be outscored by the key field.
    """

    alpha: float = 3.0
    max_candidates: int = 20
    min_score: float = 20.0
    property_min_score: float = 20.0
    bm25_k1: float = 1.2
    bm25_b: float = 0.75

    def __post_init__(self):
        if self.alpha <= 1.0:
            raise ValueError("alpha must be > 1")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")


@dataclass
class EntityRecord:
    """One indexed entity (or property; both share this shape)."""

    iri: Iri
    label: str
    description: str = ""
    aliases: Tuple[str, ...] = ()
    commonness: int = 0

    @property
    def search_key(self) -> str:
        parts = [self.label, self.description, *self.aliases]
        return " ".join(p for p in parts if p)

    def to_ref(self) -> EntityRef:
        return EntityRef(iri=self.iri, label=self.label,
                         description=self.description)


PropertyRecord = EntityRecord


@dataclass(frozen=True)
class ScoredCandidate:
    record: EntityRecord
    relevance: float
    score: float

    @property
    def iri(self) -> Iri:
        return self.record.iri


@dataclass
class FieldStats:
    """Per-field corpus statistics needed by BM25."""

    doc_count: int
    avg_len: float
    doc_freq: Dict[str, int] = field(default_factory=dict)


def bm25(query: str, field_text: str, stats: FieldStats,
         k1: float = 1.2, b: float = 0.75) -> float:
    """Okapi BM25 of ``query`` against one field of one document.

    idf uses ln(1 + (N - df + 0.5) / (df + 0.5)), which is non-negative for
    any df <= N. Query tokens count with multiplicity. Empty query or empty
    field scores 0.
    """
    q_tokens = tokenize(query)
    d_tokens = tokenize(field_text)
    if not q_tokens or not d_tokens:
        return 0.0
    tf = Counter(d_tokens)
    dl = len(d_tokens)
    avg = stats.avg_len if stats.avg_len > 0 else 1.0
    score = 0.0
    for t in q_tokens:
        f = tf.get(t, 0)
        if f == 0:
            continue
        df = stats.doc_freq.get(t, 0)
        idf = math.log(1.0 + (stats.doc_count - df + 0.5) / (df + 0.5))
        score += idf * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * dl / avg))
    return score


def combined_score(relevance: float, commonness: int) -> float:
    """Relevance damped by how prominent the entity is in the dump."""
    return relevance * math.log10(commonness + 1)


class SearchIndex:
    """Immutable BM25 index over entity or property records.

    Two field corpora are maintained per index: the label field and the
    search key (label + description + aliases). Relevance is
    max(alpha * BM25(label), BM25(search key)); the ranking score further
    multiplies by log10(commonness + 1).
    """

    def __init__(self, records: Iterable[EntityRecord], kind: str = "entity"):
        if kind not in ("entity", "property"):
            raise ValueError(f"unknown index kind: {kind!r}")
        self.kind = kind
        self.records = sorted(records, key=lambda r: r.iri)
        self._by_iri = {r.iri.value: r for r in self.records}
        self.label_stats = self._field_stats([r.label for r in self.records])
        self.key_stats = self._field_stats([r.search_key for r in self.records])
        self._postings: Dict[str, Set[int]] = {}
        for pos, r in enumerate(self.records):
            for t in set(tokenize(r.label)) | set(tokenize(r.search_key)):
                self._postings.setdefault(t, set()).add(pos)

    @staticmethod
    def _field_stats(texts: List[str]) -> FieldStats:
        lens = []
        df: Counter = Counter()
        for text in texts:
            tokens = tokenize(text)
            lens.append(len(tokens))
            df.update(set(tokens))
        avg = sum(lens) / len(lens) if lens else 0.0
        return FieldStats(doc_count=len(texts), avg_len=avg, doc_freq=dict(df))

    def __len__(self) -> int:
        return len(self.records)

    def get(self, iri: str) -> Optional[EntityRecord]:
        return self._by_iri.get(iri)

    def relevance(self, mention: str, record: EntityRecord,
                  config: RetrievalConfig) -> float:
        label_part = config.alpha * bm25(mention, record.label,
                                         self.label_stats,
                                         config.bm25_k1, config.bm25_b)
        key_part = bm25(mention, record.search_key, self.key_stats,
                        config.bm25_k1, config.bm25_b)
        return max(label_part, key_part)

    def _threshold(self, config: RetrievalConfig) -> float:
        return (config.min_score if self.kind == "entity"
                else config.property_min_score)

    def search(self, mention: str, config: RetrievalConfig) -> List[ScoredCandidate]:
        """Ranked candidates for a mention string.

        Only candidates whose combined score clears the index's minimum
        make it out, at most ``max_candidates`` of them, ordered by score
        descending with IRI as the tie-breaker.
        """
        threshold = self._threshold(config)
        if threshold > 0:
            positions: Set[int] = set()
            for t in set(tokenize(mention)):
                positions |= self._postings.get(t, set())
            pool = [self.records[i] for i in sorted(positions)]
        else:
            pool = self.records
        hits = []
        for record in pool:
            rel = self.relevance(mention, record, config)
            score = combined_score(rel, record.commonness)
            if score >= threshold:
                hits.append(ScoredCandidate(record=record, relevance=rel,
                                            score=score))
        hits.sort(key=lambda c: (-c.score, c.record.iri))
        return hits[:config.max_candidates]


StatementKey = Tuple[str, str, Tuple]


class StatementStore:
    """Set of (subject, property, object) statements from the dump.

    Object identity for entities is the IRI; literal objects are matched on
    lexical form only because dump targets carry no datatype.
    """

    def __init__(self, keys: Iterable[StatementKey] = ()):
        self._keys = frozenset(keys)

    @staticmethod
    def object_key(obj: Union[EntityRef, LiteralValue, Iri, str]) -> Tuple:
        if isinstance(obj, LiteralValue):
            return ("lit", obj.lexical)
        if isinstance(obj, EntityRef):
            if obj.iri is None:
                return ("none",)
            return ("iri", obj.iri.value)
        if isinstance(obj, Iri):
            return ("iri", obj.value)
        return ("iri", obj)

    def contains(self, subject_iri: str, property_iri: str,
                 obj: Union[EntityRef, LiteralValue, Iri, str]) -> bool:
        return (subject_iri, property_iri, self.object_key(obj)) in self._keys

    def __len__(self) -> int:
        return len(self._keys)

    def __iter__(self):
        return iter(self._keys)


@dataclass
class IndexStats:
    read: int = 0
    kept: int = 0
    malformed: int = 0
    rejected: Dict[str, int] = field(
        default_factory=lambda: {rule: 0 for rule in FILTER_RULES})

    def as_dict(self) -> dict:
        return {"read": self.read, "kept": self.kept,
                "malformed": self.malformed, "rejected": dict(self.rejected)}


@dataclass
class DumpResult:
    records: List[EntityRecord]
    statements: Set[StatementKey]
    stats: IndexStats


class DumpError(ValueError):
    """The dump cannot be ingested at all (unreadable, wrong shape)."""


def _expand_id(raw_id: str, namespace: str) -> str:
    if "://" in raw_id:
        return raw_id
    return namespace + raw_id


def _target_key(target: str, entity_ns: str) -> Tuple:
    """Dump targets are entity ids (Q-style or full IRIs) or literal text."""
    if _ENTITY_ID_RE.fullmatch(target):
        return ("iri", entity_ns + target)
    if "://" in target:
        return ("iri", target)
    return ("lit", target)


def _violated_rule(rec: dict, iri: str) -> Optional[str]:
    if not is_valid_iri(iri):
        return RULE_INVALID_IRI
    if not rec.get("outgoing"):
        return RULE_NO_PROPERTIES
    if rec.get("category"):
        return RULE_CATEGORY
    if rec.get("disambiguation"):
        return RULE_DISAMBIGUATION
    return None


def ingest_dump(lines: Iterable[str], kind: str = "entity",
                entity_ns: str = WIKIDATA_ENTITY_NS,
                property_ns: str = WIKIDATA_PROPERTY_NS) -> DumpResult:
    """Filter a dump and derive statements and commonness.

    Records violating several rules are counted once, under the first rule
    they break. Lines that are not JSON objects count as malformed and are
    skipped with a warning.
    """
    stats = IndexStats()
    own_ns = entity_ns if kind == "entity" else property_ns
    kept: List[dict] = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        stats.read += 1
        try:
            rec = json.loads(line)
            if not isinstance(rec, dict):
                raise ValueError("record is not an object")
            raw_id = rec["id"]
            if not isinstance(raw_id, str):
                raise ValueError("id is not a string")
        except (ValueError, KeyError) as exc:
            stats.malformed += 1
            logger.warning("dump line %d malformed: %s", line_no, exc)
            continue
        iri = _expand_id(raw_id, own_ns)
        rule = _violated_rule(rec, iri)
        if rule is not None:
            stats.rejected[rule] += 1
            continue
        rec["_iri"] = iri
        kept.append(rec)
        stats.kept += 1

    statements: Set[StatementKey] = set()
    for rec in kept:
        for edge in rec.get("outgoing", []):
            prop = _expand_id(str(edge["property"]), property_ns)
            statements.add((rec["_iri"], prop,
                            _target_key(str(edge["target"]), entity_ns)))

    in_degree: Counter = Counter()
    for _s, _p, okey in statements:
        if okey[0] == "iri":
            in_degree[okey[1]] += 1

    records = []
    for rec in kept:
        override = rec.get("commonness_override")
        commonness = (int(override) if override is not None
                      else in_degree[rec["_iri"]])
        records.append(EntityRecord(
            iri=Iri(rec["_iri"]),
            label=str(rec.get("label", "")),
            description=str(rec.get("description", "")),
            aliases=tuple(str(a) for a in rec.get("aliases", [])),
            commonness=commonness,
        ))
    return DumpResult(records=records, statements=statements, stats=stats)


def ingest_dump_file(path: Union[str, Path], kind: str = "entity",
                     entity_ns: str = WIKIDATA_ENTITY_NS,
                     property_ns: str = WIKIDATA_PROPERTY_NS) -> DumpResult:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return ingest_dump(fh, kind=kind, entity_ns=entity_ns,
                               property_ns=property_ns)
    except OSError as exc:
        raise DumpError(f"cannot read dump {path}: {exc}") from exc


@dataclass
class IndexBundle:
    """Everything the pipeline needs from a built index directory."""

    entities: SearchIndex
    properties: SearchIndex
    statements: StatementStore
    meta: dict


def _record_json(record: EntityRecord) -> str:
    return json.dumps({
        "iri": record.iri.value,
        "label": record.label,
        "description": record.description,
        "aliases": list(record.aliases),
        "commonness": record.commonness,
    }, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _statement_json(key: StatementKey) -> str:
    s, p, okey = key
    obj = {"iri": okey[1]} if okey[0] == "iri" else {"lit": okey[1]}
    return json.dumps({"s": s, "p": p, "o": obj}, ensure_ascii=False,
                      sort_keys=True, separators=(",", ":"))


def save_index(directory: Union[str, Path], entities: DumpResult,
               properties: DumpResult) -> None:
    """Write a self-contained index directory.

    Contents are fully determined by the dumps (sorted records, canonical
    JSON, no timestamps), so rebuilding from the same dumps is
    byte-identical.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "format": INDEX_FORMAT,
        "entities": entities.stats.as_dict(),
        "properties": properties.stats.as_dict(),
    }
    (directory / "meta.json").write_text(
        json.dumps(meta, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    for name, result in (("entities", entities), ("properties", properties)):
        lines = sorted(_record_json(r) for r in result.records)
        (directory / f"{name}.jsonl").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8")
    statements = sorted(_statement_json(k)
                        for k in entities.statements | properties.statements)
    (directory / "statements.jsonl").write_text(
        "".join(line + "\n" for line in statements), encoding="utf-8")


def _load_records(path: Path) -> List[EntityRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            records.append(EntityRecord(
                iri=Iri(rec["iri"]),
                label=rec["label"],
                description=rec.get("description", ""),
                aliases=tuple(rec.get("aliases", [])),
                commonness=int(rec.get("commonness", 0)),
            ))
    return records


def load_index(directory: Union[str, Path]) -> IndexBundle:
    directory = Path(directory)
    meta_path = directory / "meta.json"
    if not meta_path.exists():
        raise DumpError(f"{directory} is not an index directory (no meta.json)")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if meta.get("format") != INDEX_FORMAT:
        raise DumpError(
            f"unsupported index format {meta.get('format')!r}, "
            f"expected {INDEX_FORMAT!r}")
    entities = SearchIndex(_load_records(directory / "entities.jsonl"),
                           kind="entity")
    properties = SearchIndex(_load_records(directory / "properties.jsonl"),
                             kind="property")
    keys: Set[StatementKey] = set()
    with open(directory / "statements.jsonl", "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            obj = rec["o"]
            okey = (("iri", obj["iri"]) if "iri" in obj
                    else ("lit", obj["lit"]))
            keys.add((rec["s"], rec["p"], okey))
    return IndexBundle(entities=entities, properties=properties,
                       statements=StatementStore(keys), meta=meta)


def build_index_directory(entity_dump: Union[str, Path],
                          property_dump: Union[str, Path],
                          out_dir: Union[str, Path],
                          entity_ns: str = WIKIDATA_ENTITY_NS,
                          property_ns: str = WIKIDATA_PROPERTY_NS
                          ) -> Tuple[IndexStats, IndexStats]:
    """Ingest both dumps and persist the index. Returns (entity, property) stats."""
    entities = ingest_dump_file(entity_dump, kind="entity",
                                entity_ns=entity_ns, property_ns=property_ns)
    properties = ingest_dump_file(property_dump, kind="property",
                                  entity_ns=entity_ns, property_ns=property_ns)
    save_index(out_dir, entities, properties)
    return entities.stats, properties.stats
