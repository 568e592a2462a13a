"""Human-supervised knowledge graph authoring.

Text goes in, Wikidata-grounded triples come out, a human fixes what the
pipeline got wrong: entity discovery and linking, relation extraction,
knowledge fusion with NLI ranking, N-Triples export, and an HTTP service
plus CLI around the whole thing.
"""

from .model import (
    EntityRef,
    Iri,
    KnowledgeGraph,
    LiteralValue,
    Mention,
    Triple,
    from_ntriples,
    to_ntriples,
)
from .index import (
    EntityRecord,
    RetrievalConfig,
    ScoredCandidate,
    SearchIndex,
    StatementStore,
    ingest_dump,
    load_index,
)
from .discovery import LinkedMention, discover
from .relations import ExtractedRelation, link_relation
from .fusion import FusionConfig, GraphConstructor, PipelineError
from .evaluation import EvalReport, load_dataset, run_evaluation

__version__ = "0.1.0"

__all__ = [
    "EntityRef", "Iri", "KnowledgeGraph", "LiteralValue", "Mention",
    "Triple", "from_ntriples", "to_ntriples",
    "EntityRecord", "RetrievalConfig", "ScoredCandidate", "SearchIndex",
    "StatementStore", "ingest_dump", "load_index",
    "LinkedMention", "discover",
    "ExtractedRelation", "link_relation",
    "FusionConfig", "GraphConstructor", "PipelineError",
    "EvalReport", "load_dataset", "run_evaluation",
    "__version__",
]
