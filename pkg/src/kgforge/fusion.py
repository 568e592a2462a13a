"""Knowledge fusion: triple candidates, existence boost, NLI ranking.

Every linked relation is expanded into the cartesian product of its subject
and object candidate entities (a literal object contributes itself once per
subject candidate). Candidates start from the mean of the participating
retrieval scores, get boosted when the statement already exists in the dump,
are rescaled by an NLI backend's probability and finally reduced to one
triple per relation.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .discovery import (
    KIND_LINKED,
    KIND_LITERAL,
    LinkedMention,
    discover,
)
from .index import (
    EntityRecord,
    RetrievalConfig,
    ScoredCandidate,
    SearchIndex,
    StatementStore,
    tokenize,
)
from .model import KnowledgeGraph, LiteralValue, Triple
from .relations import ExtractedRelation, extract_and_link

logger = logging.getLogger(__name__)


@dataclass
class FusionConfig:
    """Scoring knobs for candidate fusion.

    ``boost_factor`` multiplies candidates whose statement already exists in
    the dump; ``literal_score`` stands in for the object score when the
    object is a literal; ``max_candidates_per_relation`` caps the cartesian
    product, keeping the highest base scores.
    """

    boost_factor: float = 3.0
    literal_score: float = 1.0
    max_candidates_per_relation: int = 1024

    def __post_init__(self):
        if self.boost_factor < 1.0:
            raise ValueError("boost_factor must be >= 1")
        if not 0.0 < self.literal_score <= 1.0:
            raise ValueError("literal_score must be in (0, 1]")
        if self.max_candidates_per_relation < 1:
            raise ValueError("max_candidates_per_relation must be >= 1")


@dataclass
class TripleCandidate:
    """One fused candidate for a relation.

    final_score stays equal to
    base_score * (boost_factor if existence_boosted else 1) * nli_probability
    throughout the chain.
    """

    subject: ScoredCandidate
    predicate: EntityRecord
    object: Union[ScoredCandidate, LiteralValue]
    subject_span: Tuple[int, int]
    object_span: Tuple[int, int]
    base_score: float = 0.0
    existence_boosted: bool = False
    boosted_score: float = 0.0
    nli_probability: float = 1.0
    final_score: float = 0.0

    @property
    def object_is_literal(self) -> bool:
        return isinstance(self.object, LiteralValue)

    def object_sort_key(self) -> str:
        if self.object_is_literal:
            return self.object.lexical
        return self.object.record.iri.value

    def to_triple(self) -> Triple:
        obj = (self.object if self.object_is_literal
               else self.object.record.to_ref())
        return Triple(
            subject=self.subject.record.to_ref(),
            predicate=self.predicate.to_ref(),
            object=obj,
            provenance=(self.subject_span, self.object_span),
        )


RelationCandidates = List[Tuple[ExtractedRelation, List[TripleCandidate]]]


def match_mention(mentions: Sequence[LinkedMention],
                  span: Tuple[int, int]) -> Optional[LinkedMention]:
    """The mention for a relation span: exact match, else maximal overlap."""
    for m in mentions:
        if m.span == span:
            return m
    best = None
    best_overlap = 0
    for m in mentions:
        overlap = min(m.span[1], span[1]) - max(m.span[0], span[0])
        if overlap > best_overlap:
            best = m
            best_overlap = overlap
    return best


def _mean(a: float, b: float) -> float:
    return (a + b) / 2.0


def fuse(mentions: Sequence[LinkedMention],
         relations: Sequence[ExtractedRelation],
         config: FusionConfig) -> RelationCandidates:
    """Cartesian-product candidates for every linked relation.

    Relations without a linked property, without matching mentions, or with
    a literal/unlinked subject or unlinked object yield no candidates.
    """
    fused: RelationCandidates = []
    for rel in relations:
        if rel.linked_property is None:
            continue
        subject = match_mention(mentions, rel.subject_span)
        obj = match_mention(mentions, rel.object_span)
        if subject is None or obj is None:
            logger.warning("relation %r has no matching mention, dropped",
                           rel.predicate_surface)
            continue
        candidates: List[TripleCandidate] = []
        if subject.kind == KIND_LINKED:
            if obj.kind == KIND_LINKED:
                pairs = [(s, o) for s in subject.candidates
                         for o in obj.candidates]
            elif obj.kind == KIND_LITERAL:
                pairs = [(s, obj.literal) for s in subject.candidates]
            else:
                pairs = []
            for s, o in pairs:
                candidates.append(TripleCandidate(
                    subject=s, predicate=rel.linked_property, object=o,
                    subject_span=subject.span, object_span=obj.span))
        if len(candidates) > config.max_candidates_per_relation:
            candidates.sort(key=lambda c: _cap_order(c, config))
            candidates = candidates[:config.max_candidates_per_relation]
        fused.append((rel, candidates))
    return fused


def base_score(candidate: TripleCandidate, config: FusionConfig) -> float:
    """Mean of the subject and object retrieval scores."""
    object_score = (config.literal_score if candidate.object_is_literal
                    else candidate.object.score)
    return _mean(candidate.subject.score, object_score)


def _cap_order(candidate: TripleCandidate, config: FusionConfig):
    # Cap selection happens before score_candidates fills base_score in,
    # so the ordering recomputes the same mean here.
    return (-base_score(candidate, config),
            candidate.subject.record.iri.value,
            candidate.object_sort_key())


def apply_existence_boost(candidate: TripleCandidate, store: StatementStore,
                          config: FusionConfig) -> TripleCandidate:
    """Multiply the score when the dump already contains the statement."""
    exists = store.contains(candidate.subject.record.iri.value,
                            candidate.predicate.iri.value,
                            candidate.object if candidate.object_is_literal
                            else candidate.object.record.iri)
    candidate.existence_boosted = exists
    factor = config.boost_factor if exists else 1.0
    candidate.boosted_score = candidate.base_score * factor
    candidate.final_score = candidate.boosted_score * candidate.nli_probability
    return candidate


def score_candidates(fused: RelationCandidates, store: StatementStore,
                     config: FusionConfig) -> None:
    for _rel, candidates in fused:
        for c in candidates:
            c.base_score = base_score(c, config)
            apply_existence_boost(c, store, config)


def nli_label(candidate: TripleCandidate) -> str:
    """Verbalization checked against the source text.

    "<subject label> (<description>) <predicate label> <object label>
    (<description>)"; empty descriptions drop their brackets, literal
    objects appear as the plain lexical form.
    """
    def entity_part(label: str, description: str) -> str:
        return f"{label} ({description})" if description else label

    subj = entity_part(candidate.subject.record.label,
                       candidate.subject.record.description)
    if candidate.object_is_literal:
        obj = candidate.object.lexical
    else:
        obj = entity_part(candidate.object.record.label,
                          candidate.object.record.description)
    return f"{subj} {candidate.predicate.label} {obj}"


class TokenOverlapNli:
    """Entailment stand-in: Jaccard token overlap between label and text."""

    backend_id = "token-overlap"

    def infer(self, text: str, labels: Sequence[str]) -> List[float]:
        text_tokens = set(tokenize(text))
        probs = []
        for label in labels:
            label_tokens = set(tokenize(label))
            union = text_tokens | label_tokens
            if not union:
                probs.append(0.0)
                continue
            jaccard = len(text_tokens & label_tokens) / len(union)
            probs.append(min(1.0, max(0.0, jaccard)))
        return probs


def nli_rank(text: str, fused: RelationCandidates, backend) -> None:
    """Rescale candidate scores by entailment probability.

    One backend call per relation. On failure (or a malformed response) the
    relation keeps probability 1 for all its candidates.
    """
    for rel, candidates in fused:
        if not candidates:
            continue
        labels = [nli_label(c) for c in candidates]
        try:
            probs = [float(p) for p in backend.infer(text, labels)]
            if len(probs) != len(candidates) or \
                    any(not 0.0 <= p <= 1.0 for p in probs):
                raise ValueError("backend returned invalid probabilities")
        except Exception:
            name = getattr(backend, "backend_id", type(backend).__name__)
            logger.warning("NLI backend %s failed for %r, keeping scores",
                           name, rel.predicate_surface, exc_info=True)
            probs = [1.0] * len(candidates)
        for c, p in zip(candidates, probs):
            c.nli_probability = p
            c.final_score = c.boosted_score * p


def select(fused: RelationCandidates,
           score_of=lambda c: c.final_score) -> List[Triple]:
    """Best candidate per relation, as triples.

    Ties break on the lexicographically smallest subject IRI, then object.
    A zero score still yields a triple; empty candidate lists yield nothing.
    """
    triples: List[Triple] = []
    for _rel, candidates in fused:
        if not candidates:
            continue
        best = min(candidates,
                   key=lambda c: (-score_of(c),
                                  c.subject.record.iri.value,
                                  c.object_sort_key()))
        triples.append(best.to_triple())
    return triples


class PipelineError(RuntimeError):
    """A construction stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception,
                 partial: Optional["StageOutputs"] = None):
        super().__init__(f"{stage} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.partial = partial


@dataclass
class StageOutputs:
    """Intermediate products of one construction run, stage by stage."""

    text: str = ""
    mentions: List[LinkedMention] = field(default_factory=list)
    relations: List[ExtractedRelation] = field(default_factory=list)
    fused: RelationCandidates = field(default_factory=list)
    fusion_selection: List[Triple] = field(default_factory=list)
    graph: Optional[KnowledgeGraph] = None


class GraphConstructor:
    """End-to-end text -> knowledge graph pipeline.

    Entity discovery and relation extraction run as two concurrent tasks
    over the same input and are joined before fusion. All downstream stages
    are deterministic, so repeated runs on the same input produce identical
    graphs.
    """

    def __init__(self, entities: SearchIndex, properties: SearchIndex,
                 statements: StatementStore, recognizers: Sequence,
                 embedder, extractor, nli,
                 retrieval: Optional[RetrievalConfig] = None,
                 fusion: Optional[FusionConfig] = None,
                 rerank_enabled: bool = True):
        self.entities = entities
        self.properties = properties
        self.statements = statements
        self.recognizers = list(recognizers)
        self.embedder = embedder
        self.extractor = extractor
        self.nli = nli
        self.retrieval = retrieval or RetrievalConfig()
        self.fusion = fusion or FusionConfig()
        self.rerank_enabled = rerank_enabled

    def run(self, text: str) -> StageOutputs:
        """Run all stages, keeping intermediate outputs.

        Raises PipelineError naming the failed stage; the exception carries
        the partial outputs produced so far.
        """
        outputs = StageOutputs(text=text)
        with ThreadPoolExecutor(max_workers=2) as pool:
            discovery_task = pool.submit(
                discover, text, self.recognizers, self.embedder,
                self.entities, self.retrieval, self.rerank_enabled)
            relation_task = pool.submit(
                extract_and_link, text, self.extractor, self.properties,
                self.retrieval)
            try:
                outputs.mentions = discovery_task.result()
            except Exception as exc:
                relation_task.cancel()
                raise PipelineError("entity-discovery", exc, outputs) from exc
            try:
                outputs.relations = relation_task.result()
            except Exception as exc:
                raise PipelineError("relation-extraction", exc, outputs) from exc
        try:
            linked = [r for r in outputs.relations
                      if r.linked_property is not None]
            outputs.fused = fuse(outputs.mentions, linked, self.fusion)
            score_candidates(outputs.fused, self.statements, self.fusion)
            outputs.fusion_selection = select(
                outputs.fused, score_of=lambda c: c.boosted_score)
        except Exception as exc:
            raise PipelineError("fusion", exc, outputs) from exc
        try:
            nli_rank(text, outputs.fused, self.nli)
            triples = select(outputs.fused)
        except Exception as exc:
            raise PipelineError("nli", exc, outputs) from exc
        outputs.graph = KnowledgeGraph(source_text=text, triples=triples,
                                       mentions=outputs.mentions)
        return outputs

    def construct(self, text: str) -> KnowledgeGraph:
        return self.run(text).graph
