"""HTTP clients for swapping pipeline stages out to external services.

All four backends speak JSON over POST:

* recognizer:  {"text": ...} -> {"mentions": [{"start", "end", "surface",
  "etype"}]}
* embedder:    {"sentence": ...} -> {"vector": [float, ...]}
* extractor:   {"text": ...} -> {"relations": [{"subject_span": [s, e],
  "object_span": [s, e], "predicate_surface": ...}]}
* nli:         {"text": ..., "labels": [...]} -> {"probabilities": [...]}

Errors surface as httpx exceptions or ValueError; callers already treat a
failing backend as contributing nothing, so no retry logic lives here.
"""

from typing import List, Optional, Sequence

import httpx
import numpy as np

from .model import Mention
from .relations import ExtractedRelation

_TIMEOUT = 30.0


class _RemoteBackend:
    def __init__(self, url: str, client: Optional[httpx.Client] = None):
        self.url = url
        self._client = client or httpx.Client(timeout=_TIMEOUT)

    def _post(self, payload: dict) -> dict:
        response = self._client.post(self.url, json=payload)
        response.raise_for_status()
        body = response.json()
        if not isinstance(body, dict):
            raise ValueError(f"{self.url} returned a non-object body")
        return body


class RemoteRecognizer(_RemoteBackend):
    backend_id = "remote-recognizer"

    def recognize(self, text: str) -> List[Mention]:
        body = self._post({"text": text})
        return [Mention(start=int(m["start"]), end=int(m["end"]),
                        surface=m["surface"], etype=m["etype"],
                        source=self.backend_id)
                for m in body["mentions"]]


class RemoteEmbedder(_RemoteBackend):
    backend_id = "remote-embedder"

    def embed(self, sentence: str) -> np.ndarray:
        body = self._post({"sentence": sentence})
        return np.asarray(body["vector"], dtype=np.float64)


class RemoteExtractor(_RemoteBackend):
    backend_id = "remote-extractor"

    def extract(self, text: str) -> List[ExtractedRelation]:
        body = self._post({"text": text})
        return [ExtractedRelation(
            subject_span=tuple(r["subject_span"]),
            object_span=tuple(r["object_span"]),
            predicate_surface=r["predicate_surface"])
            for r in body["relations"]]


class RemoteNli(_RemoteBackend):
    backend_id = "remote-nli"

    def infer(self, text: str, labels: Sequence[str]) -> List[float]:
        body = self._post({"text": text, "labels": list(labels)})
        return [float(p) for p in body["probabilities"]]
