"""HTTP JSON API over the construction pipeline.

Sessions are kept one file per session under the configured directory and
written atomically (temp file + rename), so a restarted service picks up
where it left off. Every accepted edit bumps the session revision by one;
edits carry the revision they were based on and stale ones are rejected
with 409 and the current revision.
"""

import json
import logging
import os
import re
import tempfile
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import AppConfig, build_constructor
from .discovery import (
    KIND_LINKED,
    KIND_LITERAL,
    KIND_UNLINKED,
    LinkedMention,
)
from .fusion import GraphConstructor, PipelineError
from .index import EntityRecord, ScoredCandidate, SearchIndex
from .model import (
    EntityRef,
    Iri,
    KnowledgeGraph,
    LiteralValue,
    Mention,
    Triple,
    is_valid_iri,
    to_ntriples,
)

logger = logging.getLogger(__name__)

_SESSION_ID_RE = re.compile(r"[0-9a-f]{32}")


class EditError(ValueError):
    """An edit request that cannot be applied to the session's graph."""


class StaleRevisionError(RuntimeError):
    def __init__(self, current: int):
        super().__init__(f"stale revision, current is {current}")
        self.current = current


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class Session:
    id: str
    revision: int
    created_at: str
    updated_at: str
    graph: KnowledgeGraph


# ---------------------------------------------------------------------------
# Wire format


def _candidate_json(c: ScoredCandidate) -> dict:
    return {"iri": c.record.iri.value, "label": c.record.label,
            "description": c.record.description,
            "relevance": c.relevance, "score": c.score}


def _candidate_from_json(raw: dict) -> ScoredCandidate:
    record = EntityRecord(iri=Iri(raw["iri"]), label=raw.get("label", ""),
                          description=raw.get("description", ""))
    return ScoredCandidate(record=record,
                           relevance=float(raw.get("relevance", 0.0)),
                           score=float(raw.get("score", 0.0)))


def _literal_json(lit: LiteralValue) -> dict:
    return {"kind": lit.kind, "lexical": lit.lexical,
            "datatype": lit.datatype.value}


def _literal_from_json(raw: dict) -> LiteralValue:
    return LiteralValue(kind=raw["kind"], lexical=raw["lexical"],
                        datatype=Iri(raw["datatype"]))


def _mention_json(lm: LinkedMention) -> dict:
    return {
        "start": lm.mention.start,
        "end": lm.mention.end,
        "surface": lm.mention.surface,
        "etype": lm.mention.etype,
        "source": lm.mention.source,
        "kind": lm.kind,
        "selected": lm.selected,
        "candidates": [_candidate_json(c) for c in lm.candidates],
        "literal": _literal_json(lm.literal) if lm.literal else None,
    }


def _mention_from_json(raw: dict) -> LinkedMention:
    mention = Mention(start=raw["start"], end=raw["end"],
                      surface=raw["surface"], etype=raw["etype"],
                      source=raw.get("source", ""))
    literal = raw.get("literal")
    return LinkedMention(
        mention=mention,
        kind=raw["kind"],
        candidates=[_candidate_from_json(c)
                    for c in raw.get("candidates", [])],
        selected=raw.get("selected", 0),
        literal=_literal_from_json(literal) if literal else None,
    )


def _ref_json(ref: EntityRef) -> dict:
    out: dict = {"label": ref.label, "description": ref.description}
    if ref.is_linked:
        out["iri"] = ref.iri.value
    else:
        out["blank"] = ref.blank
        if ref.span is not None:
            out["span"] = list(ref.span)
    return out


def _ref_from_json(raw: dict) -> EntityRef:
    span = tuple(raw["span"]) if raw.get("span") else None
    return EntityRef(
        iri=Iri(raw["iri"]) if raw.get("iri") else None,
        label=raw.get("label", ""),
        description=raw.get("description", ""),
        span=span,
        blank=raw.get("blank"),
    )


def _triple_json(t: Triple) -> dict:
    obj = (({"literal": _literal_json(t.object)})
           if isinstance(t.object, LiteralValue) else _ref_json(t.object))
    prov = None
    if t.provenance is not None:
        prov = {"subject": list(t.provenance[0]),
                "object": list(t.provenance[1])}
    return {"subject": _ref_json(t.subject),
            "predicate": _ref_json(t.predicate),
            "object": obj, "provenance": prov}


def _triple_from_json(raw: dict) -> Triple:
    obj_raw = raw["object"]
    obj: Union[EntityRef, LiteralValue]
    if "literal" in obj_raw:
        obj = _literal_from_json(obj_raw["literal"])
    else:
        obj = _ref_from_json(obj_raw)
    prov = None
    if raw.get("provenance"):
        prov = (tuple(raw["provenance"]["subject"]),
                tuple(raw["provenance"]["object"]))
    return Triple(subject=_ref_from_json(raw["subject"]),
                  predicate=_ref_from_json(raw["predicate"]),
                  object=obj, provenance=prov)


def session_payload(session: Session) -> dict:
    graph = session.graph
    return {
        "sessionId": session.id,
        "revision": session.revision,
        "createdAt": session.created_at,
        "updatedAt": session.updated_at,
        "text": graph.source_text,
        "mentions": [_mention_json(m) for m in graph.mentions],
        "graph": {"triples": [_triple_json(t) for t in graph.triples]},
    }


def _session_from_payload(raw: dict) -> Session:
    graph = KnowledgeGraph(
        source_text=raw.get("text", ""),
        triples=[_triple_from_json(t)
                 for t in raw.get("graph", {}).get("triples", [])],
        mentions=[_mention_from_json(m) for m in raw.get("mentions", [])],
    )
    return Session(id=raw["sessionId"], revision=int(raw["revision"]),
                   created_at=raw.get("createdAt", ""),
                   updated_at=raw.get("updatedAt", ""), graph=graph)


# ---------------------------------------------------------------------------
# Session store


class SessionStore:
    """Disk-backed session registry with per-session locking."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._guard = threading.Lock()
        self._locks: Dict[str, threading.Lock] = {}
        self._cache: Dict[str, Session] = {}

    def _lock_for(self, sid: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(sid, threading.Lock())

    def _path(self, sid: str) -> Path:
        return self.directory / f"{sid}.json"

    def _persist(self, session: Session) -> None:
        payload = session_payload(session)
        data = json.dumps(payload, ensure_ascii=False, indent=2)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(data)
            os.replace(tmp, self._path(session.id))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def create(self, graph: KnowledgeGraph) -> Session:
        now = _now()
        session = Session(id=uuid.uuid4().hex, revision=1, created_at=now,
                          updated_at=now, graph=graph)
        with self._lock_for(session.id):
            self._persist(session)
            self._cache[session.id] = session
        return session

    def get(self, sid: str) -> Session:
        if not _SESSION_ID_RE.fullmatch(sid):
            raise KeyError(sid)
        if sid in self._cache:
            return self._cache[sid]
        path = self._path(sid)
        if not path.exists():
            raise KeyError(sid)
        session = _session_from_payload(
            json.loads(path.read_text(encoding="utf-8")))
        self._cache[sid] = session
        return session

    def mutate(self, sid: str, expected_revision: int, apply_edit) -> Session:
        """Apply an edit under the session lock and persist the result."""
        with self._lock_for(sid):
            session = self.get(sid)
            if expected_revision != session.revision:
                raise StaleRevisionError(session.revision)
            apply_edit(session)
            session.revision += 1
            session.updated_at = _now()
            self._persist(session)
            return session


# ---------------------------------------------------------------------------
# Graph edits


def _find_mention(graph: KnowledgeGraph,
                  span: Tuple[int, int]) -> Optional[LinkedMention]:
    for lm in graph.mentions:
        if lm.span == tuple(span):
            return lm
    return None


def _ref_matches(ref, key: Tuple) -> bool:
    return isinstance(ref, EntityRef) and ref.node_key() == key


def _mention_identity(graph: KnowledgeGraph,
                      lm: LinkedMention) -> Optional[Tuple]:
    """Node identity of the entity the mention currently resolves to."""
    if lm.kind == KIND_LINKED:
        return ("iri", lm.selected_candidate().record.iri.value)
    if lm.kind == KIND_UNLINKED:
        blank = graph.blank_for(lm.span)
        if blank is not None:
            return ("blank", blank)
        return ("span", lm.span[0], lm.span[1])
    return None


def _rewrite_entity(graph: KnowledgeGraph, old_key: Tuple,
                    new_ref: EntityRef) -> int:
    """Point every triple that references ``old_key`` at ``new_ref``."""
    changed = 0
    for triple in graph.triples:
        subject, obj = triple.subject, triple.object
        touched = False
        if _ref_matches(subject, old_key):
            subject = new_ref
            touched = True
        if _ref_matches(obj, old_key):
            obj = new_ref
            touched = True
        if touched:
            graph.remove(triple.key())
            graph.add(Triple(subject=subject, predicate=triple.predicate,
                             object=obj, provenance=triple.provenance))
            changed += 1
    return changed


def _remove_entity_triples(graph: KnowledgeGraph, key: Tuple) -> int:
    removed = 0
    for triple in graph.triples:
        if _ref_matches(triple.subject, key) or \
                _ref_matches(triple.object, key):
            graph.remove(triple.key())
            removed += 1
    return removed


def _remove_literal_triples(graph: KnowledgeGraph,
                            span: Tuple[int, int]) -> int:
    removed = 0
    for triple in graph.triples:
        if isinstance(triple.object, LiteralValue) and triple.provenance \
                and tuple(triple.provenance[1]) == tuple(span):
            graph.remove(triple.key())
            removed += 1
    return removed


def _require_span(edit: dict, field: str = "span") -> Tuple[int, int]:
    value = edit.get(field)
    if (not isinstance(value, (list, tuple)) or len(value) != 2 or
            not all(isinstance(v, int) for v in value)):
        raise EditError(f"{field} must be [start, end]")
    return (value[0], value[1])


def _lookup_record(index: SearchIndex, iri: str, label: str,
                   description: str) -> EntityRecord:
    found = index.get(iri)
    if found is not None:
        return found
    if not is_valid_iri(iri):
        raise EditError(f"invalid IRI: {iri!r}")
    return EntityRecord(iri=Iri(iri), label=label, description=description)


class EditApplier:
    """Applies validated edit payloads to a session's graph."""

    def __init__(self, entities: SearchIndex, properties: SearchIndex):
        self.entities = entities
        self.properties = properties

    def apply(self, session: Session, edit: dict) -> None:
        action = edit.get("action")
        handler = {
            "relink-mention": self.relink_mention,
            "delete-entity": self.delete_entity,
            "delete-relation": self.delete_relation,
            "add-entity": self.add_entity,
            "add-relation": self.add_relation,
        }.get(action)
        if handler is None:
            raise EditError(f"unknown action: {action!r}")
        handler(session.graph, edit)

    def relink_mention(self, graph: KnowledgeGraph, edit: dict) -> None:
        span = _require_span(edit)
        lm = _find_mention(graph, span)
        if lm is None:
            raise EditError(f"no mention at span {list(span)}")
        if lm.kind == KIND_LITERAL:
            raise EditError("literal mentions cannot be relinked")
        old_key = _mention_identity(graph, lm)
        iri = edit.get("iri")
        if iri is None:
            lm.kind = KIND_UNLINKED
            new_ref = EntityRef(iri=None, label=lm.mention.surface,
                                span=lm.span)
        else:
            record = None
            for i, c in enumerate(lm.candidates):
                if c.record.iri.value == iri:
                    lm.selected = i
                    record = c.record
                    break
            if record is None:
                record = _lookup_record(self.entities, iri,
                                        edit.get("label", ""),
                                        edit.get("description", ""))
                lm.candidates.insert(0, ScoredCandidate(
                    record=record, relevance=0.0, score=0.0))
                lm.selected = 0
            lm.kind = KIND_LINKED
            new_ref = record.to_ref()
        if old_key is not None:
            _rewrite_entity(graph, old_key, new_ref)

    def delete_entity(self, graph: KnowledgeGraph, edit: dict) -> None:
        if edit.get("iri") is not None:
            key = ("iri", edit["iri"])
            removed = _remove_entity_triples(graph, key)
            survivors = []
            dropped = 0
            for lm in graph.mentions:
                if lm.kind == KIND_LINKED and \
                        lm.selected_candidate().record.iri.value == edit["iri"]:
                    dropped += 1
                    continue
                survivors.append(lm)
            graph.mentions[:] = survivors
            if removed == 0 and dropped == 0:
                raise EditError(f"no entity {edit['iri']!r} in this graph")
            return
        span = _require_span(edit)
        lm = _find_mention(graph, span)
        if lm is None:
            raise EditError(f"no mention at span {list(span)}")
        if lm.kind == KIND_LITERAL:
            _remove_literal_triples(graph, span)
        else:
            key = _mention_identity(graph, lm)
            if key is not None:
                _remove_entity_triples(graph, key)
        graph.mentions.remove(lm)

    def delete_relation(self, graph: KnowledgeGraph, edit: dict) -> None:
        try:
            skey = self._subject_key(edit.get("subject"))
            pkey = ("iri", str(edit.get("predicate")))
            okey = self._object_key(edit.get("object"))
        except (TypeError, KeyError) as exc:
            raise EditError(f"malformed relation reference: {exc}") from exc
        removed = graph.remove((skey, pkey, okey))
        if removed is None:
            raise EditError("no such relation in this graph")

    @staticmethod
    def _subject_key(raw) -> Tuple:
        if not isinstance(raw, str) or not raw:
            raise EditError("subject must be an IRI or _:label string")
        if raw.startswith("_:"):
            return ("blank", raw[2:])
        return ("iri", raw)

    @staticmethod
    def _object_key(raw) -> Tuple:
        if isinstance(raw, str) and raw:
            if raw.startswith("_:"):
                return ("blank", raw[2:])
            return ("iri", raw)
        if isinstance(raw, dict) and "literal" in raw:
            lit = raw["literal"]
            return ("literal", lit["lexical"], lit["datatype"])
        raise EditError("object must be an IRI, _:label, or {literal: ...}")

    def add_entity(self, graph: KnowledgeGraph, edit: dict) -> None:
        span = _require_span(edit)
        text = graph.source_text
        if not 0 <= span[0] < span[1] <= len(text):
            raise EditError(f"span {list(span)} outside the text")
        for lm in graph.mentions:
            if lm.span[0] < span[1] and span[0] < lm.span[1]:
                raise EditError(f"span {list(span)} overlaps an existing "
                                "mention")
        mention = Mention(start=span[0], end=span[1],
                          surface=text[span[0]:span[1]], etype="CONCEPT",
                          source="user")
        iri = edit.get("iri")
        if iri is None:
            lm = LinkedMention(mention=mention, kind=KIND_UNLINKED)
        else:
            record = _lookup_record(self.entities, iri,
                                    edit.get("label", ""),
                                    edit.get("description", ""))
            lm = LinkedMention(
                mention=mention, kind=KIND_LINKED,
                candidates=[ScoredCandidate(record=record, relevance=0.0,
                                            score=0.0)],
                selected=0)
        graph.mentions.append(lm)
        graph.mentions.sort(key=lambda m: m.span)

    def add_relation(self, graph: KnowledgeGraph, edit: dict) -> None:
        subject_span = _require_span(edit, "subject_span")
        object_span = _require_span(edit, "object_span")
        subject = _find_mention(graph, subject_span)
        obj = _find_mention(graph, object_span)
        if subject is None or obj is None:
            raise EditError("both spans must name existing mentions")
        if subject.kind == KIND_LITERAL:
            raise EditError("a literal cannot be the subject of a relation")
        prop_iri = edit.get("property")
        if not isinstance(prop_iri, str) or not prop_iri:
            raise EditError("property is required")
        prop = _lookup_record(self.properties, prop_iri,
                              edit.get("label", ""),
                              edit.get("description", ""))
        obj_term: Union[EntityRef, LiteralValue]
        if obj.kind == KIND_LITERAL:
            obj_term = obj.literal
        else:
            obj_term = obj.entity_ref()
        graph.add(Triple(subject=subject.entity_ref(),
                         predicate=prop.to_ref(), object=obj_term,
                         provenance=(subject_span, object_span)))


# ---------------------------------------------------------------------------
# FastAPI application


class ConstructRequest(BaseModel):
    text: Optional[str] = None


class EditRequest(BaseModel):
    revision: int
    action: str

    model_config = {"extra": "allow"}


def create_app(config: AppConfig,
               constructor: Optional[GraphConstructor] = None) -> FastAPI:
    """Build the service around a config (and optionally a prebuilt pipeline)."""
    if constructor is None:
        constructor = build_constructor(config)
    if config.session_dir is None:
        raise ValueError("session_dir is required to run the service")
    store = SessionStore(config.session_dir)
    applier = EditApplier(constructor.entities, constructor.properties)
    app = FastAPI(title="kgforge", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.constructor = constructor

    def _search_payload(index: SearchIndex, q: Optional[str]):
        if q is None or not q.strip():
            raise HTTPException(status_code=400,
                                detail="query parameter q is required")
        hits = index.search(q, constructor.retrieval)
        return {"candidates": [_candidate_json(c) for c in hits]}

    @app.post("/api/construct")
    def construct(request: ConstructRequest):
        text = request.text
        if not text or not text.strip():
            raise HTTPException(status_code=400, detail="text is required")
        if len(text) > config.max_text_length:
            raise HTTPException(
                status_code=400,
                detail=f"text exceeds {config.max_text_length} characters")
        try:
            graph = constructor.construct(text)
        except PipelineError as exc:
            logger.exception("construction failed at stage %s", exc.stage)
            raise HTTPException(status_code=500,
                                detail={"stage": exc.stage,
                                        "message": str(exc)}) from exc
        session = store.create(graph)
        return session_payload(session)

    @app.get("/api/entities")
    def search_entities(q: Optional[str] = Query(default=None)):
        return _search_payload(constructor.entities, q)

    @app.get("/api/properties")
    def search_properties(q: Optional[str] = Query(default=None)):
        return _search_payload(constructor.properties, q)

    @app.get("/api/graph/{sid}")
    def get_graph(sid: str):
        try:
            return session_payload(store.get(sid))
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"no session {sid}") from None

    @app.put("/api/graph/{sid}")
    def edit_graph(sid: str, request: EditRequest):
        edit = request.model_dump()
        try:
            session = store.mutate(sid, request.revision,
                                   lambda s: applier.apply(s, edit))
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"no session {sid}") from None
        except StaleRevisionError as exc:
            raise HTTPException(
                status_code=409,
                detail={"message": "stale revision",
                        "revision": exc.current}) from exc
        except EditError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return session_payload(session)

    @app.get("/api/graph/{sid}/ntriples")
    def download_ntriples(sid: str):
        try:
            session = store.get(sid)
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"no session {sid}") from None
        body = to_ntriples(session.graph)
        return Response(
            content=body,
            media_type="application/n-triples; charset=utf-8",
            headers={"Content-Disposition":
                     f'attachment; filename="graph-{sid[:8]}.nt"'})

    if config.static_dir:
        app.mount("/", StaticFiles(directory=config.static_dir, html=True),
                  name="frontend")
    return app
