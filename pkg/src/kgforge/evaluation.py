"""Stage-wise evaluation of the construction pipeline.

Datasets are line-delimited JSON::

    {"docId": "d1", "text": "...",
     "mentions": [{"start": 0, "end": 6, "iri": "http://..."}],
     "triples": [{"s": "http://...", "p": "http://...", "o": "...",
                  "literal": false}]}

Each document is pushed through the pipeline once; every stage's
predictions are compared with gold as sets, counts are turned into
precision/recall/F1 per document and macro-averaged. Reported stages, in
order: named entity recognition, entity retrieval, entity reranking,
relation extraction, relation linking, knowledge fusion, natural language
inference.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Set, Tuple, Union

from .discovery import KIND_LINKED
from .fusion import GraphConstructor, PipelineError, StageOutputs
from .model import EntityRef, LiteralValue, Triple

logger = logging.getLogger(__name__)

STAGE_NER = "Named Entity Recognition"
STAGE_RETRIEVAL = "Entity Retrieval"
STAGE_RERANKING = "Entity Reranking"
STAGE_RELATION_EXTRACTION = "Relation Extraction"
STAGE_RELATION_LINKING = "Relation Linking"
STAGE_FUSION = "Knowledge Fusion"
STAGE_NLI = "Natural Language Inference"

STAGES = (STAGE_NER, STAGE_RETRIEVAL, STAGE_RERANKING,
          STAGE_RELATION_EXTRACTION, STAGE_RELATION_LINKING,
          STAGE_FUSION, STAGE_NLI)

Span = Tuple[int, int]
TripleKey = Tuple[Tuple, Tuple, Tuple]


@dataclass
class EvalRecord:
    doc_id: str
    text: str
    gold_mentions: List[Tuple[Span, str]]
    gold_triples: List[TripleKey]


@dataclass
class StageMetrics:
    stage: str
    precision: float
    recall: float
    f1: float


@dataclass
class EvalReport:
    metrics: List[StageMetrics]
    documents: int
    failures: int = 0


class DatasetError(ValueError):
    """The dataset cannot be used (unreadable or empty)."""


def _triple_key(subject_iri: str, property_iri: str, obj: str,
                literal: bool) -> TripleKey:
    okey = ("lit", obj) if literal else ("iri", obj)
    return (("iri", subject_iri), ("iri", property_iri), okey)


def load_dataset(path: Union[str, Path]) -> List[EvalRecord]:
    """Read evaluation records; malformed ones are skipped with a warning."""
    records: List[EvalRecord] = []
    skipped = 0
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            text = raw["text"]
            mentions = []
            for m in raw.get("mentions", []):
                start, end = int(m["start"]), int(m["end"])
                if not 0 <= start < end <= len(text):
                    raise ValueError(
                        f"mention span [{start}, {end}) outside text")
                mentions.append(((start, end), m["iri"]))
            triples = [
                _triple_key(t["s"], t["p"], t["o"], bool(t.get("literal")))
                for t in raw.get("triples", [])
            ]
            records.append(EvalRecord(doc_id=str(raw["docId"]), text=text,
                                      gold_mentions=mentions,
                                      gold_triples=triples))
        except (ValueError, KeyError, TypeError) as exc:
            skipped += 1
            logger.warning("dataset line %d skipped: %s", line_no, exc)
    if skipped:
        logger.warning("dataset: skipped %d malformed record(s)", skipped)
    return records


def _normalized_triple_key(triple: Triple) -> TripleKey:
    """Triple identity with literal datatypes erased.

    Gold objects carry no datatype, so predicted literal objects compare on
    lexical form alone.
    """
    skey = triple.subject.node_key()
    pkey = triple.predicate.node_key()
    if isinstance(triple.object, LiteralValue):
        okey = ("lit", triple.object.lexical)
    else:
        okey = triple.object.node_key()
    return (skey, pkey, okey)


def stage_predictions(outputs: StageOutputs, stage: str) -> Set:
    """Project one stage's output onto comparable prediction items.

    Retrieval counts every candidate of a mention as one prediction (a gold
    pair hits when any candidate matches); reranking counts only the top
    candidate. Relation stages compare linked property IRIs, fusion and NLI
    compare whole triples (fusion before NLI rescaling).
    """
    if stage == STAGE_NER:
        return {m.span for m in outputs.mentions}
    if stage == STAGE_RETRIEVAL:
        return {(m.span, c.record.iri.value)
                for m in outputs.mentions if m.kind == KIND_LINKED
                for c in m.candidates}
    if stage == STAGE_RERANKING:
        return {(m.span, m.selected_candidate().record.iri.value)
                for m in outputs.mentions if m.kind == KIND_LINKED}
    if stage in (STAGE_RELATION_EXTRACTION, STAGE_RELATION_LINKING):
        return {r.linked_property.iri.value for r in outputs.relations
                if r.linked_property is not None}
    if stage == STAGE_FUSION:
        return {_normalized_triple_key(t) for t in outputs.fusion_selection}
    if stage == STAGE_NLI:
        graph = outputs.graph
        triples = graph.triples if graph is not None else []
        return {_normalized_triple_key(t) for t in triples}
    raise ValueError(f"unknown stage: {stage!r}")


def gold_items(record: EvalRecord, stage: str) -> Set:
    if stage == STAGE_NER:
        return {span for span, _iri in record.gold_mentions}
    if stage in (STAGE_RETRIEVAL, STAGE_RERANKING):
        return {(span, iri) for span, iri in record.gold_mentions}
    if stage in (STAGE_RELATION_EXTRACTION, STAGE_RELATION_LINKING):
        return {pkey[1] for _skey, pkey, _okey in record.gold_triples}
    if stage in (STAGE_FUSION, STAGE_NLI):
        return set(record.gold_triples)
    raise ValueError(f"unknown stage: {stage!r}")


def stage_hits(predictions: Set, gold: Set) -> Tuple[int, int, int]:
    """(tp, fp, fn) set arithmetic; swapping the arguments swaps fp and fn."""
    tp = len(predictions & gold)
    return tp, len(predictions) - tp, len(gold) - tp


def _prf(tp: int, fp: int, fn: int) -> Tuple[float, float, float]:
    pred_empty = tp + fp == 0
    gold_empty = tp + fn == 0
    if pred_empty and gold_empty:
        return 1.0, 1.0, 1.0
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 1.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return precision, recall, f1


def macro_prf(per_doc_counts: Sequence[Tuple[int, int, int]],
              stage: str) -> StageMetrics:
    """Macro-averaged metrics over per-document (tp, fp, fn) counts."""
    if not per_doc_counts:
        raise DatasetError("cannot evaluate an empty dataset")
    ps, rs, fs = [], [], []
    for tp, fp, fn in per_doc_counts:
        p, r, f1 = _prf(tp, fp, fn)
        ps.append(p)
        rs.append(r)
        fs.append(f1)
    n = len(per_doc_counts)
    return StageMetrics(stage=stage, precision=sum(ps) / n,
                        recall=sum(rs) / n, f1=sum(fs) / n)


def run_evaluation(records: Sequence[EvalRecord],
                   constructor: GraphConstructor) -> EvalReport:
    """Evaluate every stage over the dataset.

    A pipeline failure on a document leaves the already-produced stages
    scored normally and the failed ones scored as empty predictions.
    """
    if not records:
        raise DatasetError("cannot evaluate an empty dataset")
    counts: Dict[str, List[Tuple[int, int, int]]] = {s: [] for s in STAGES}
    failures = 0
    for record in records:
        try:
            outputs = constructor.run(record.text)
        except PipelineError as exc:
            failures += 1
            logger.warning("document %s failed at stage %s", record.doc_id,
                           exc.stage)
            outputs = exc.partial or StageOutputs(text=record.text)
        for stage in STAGES:
            predictions = stage_predictions(outputs, stage)
            gold = gold_items(record, stage)
            counts[stage].append(stage_hits(predictions, gold))
    metrics = [macro_prf(counts[stage], stage) for stage in STAGES]
    return EvalReport(metrics=metrics, documents=len(records),
                      failures=failures)


def render_table(report: EvalReport) -> str:
    """Aligned text table, one row per stage in pipeline order."""
    header = ("Task", "Precision", "Recall", "F1")
    rows = [(m.stage, f"{m.precision:.3f}", f"{m.recall:.3f}", f"{m.f1:.3f}")
            for m in report.metrics]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(4)]
    lines = []
    for row in [header] + rows:
        cells = [row[0].ljust(widths[0])]
        cells += [row[i].rjust(widths[i]) for i in range(1, 4)]
        lines.append("  ".join(cells).rstrip())
    lines.append("")
    lines.append(f"documents: {report.documents}   "
                 f"failures: {report.failures}")
    return "\n".join(lines)


def report_json(report: EvalReport) -> dict:
    return {
        "documents": report.documents,
        "failures": report.failures,
        "stages": [
            {"stage": m.stage, "precision": m.precision,
             "recall": m.recall, "f1": m.f1}
            for m in report.metrics
        ],
    }
