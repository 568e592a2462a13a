"""Application configuration and pipeline wiring.

Config files are JSON. Recognized keys mirror AppConfig::

    {"index_dir": "path", "session_dir": "path",
     "listen": "127.0.0.1:8420", "max_text_length": 50000,
     "gazetteer": "path or null", "patterns": "path or null",
     "recognizers": ["gazetteer", "concepts"],
     "embedder": "hashed-trigram" | {"url": "http://..."},
     "extractor": "patterns" | {"url": "http://..."},
     "nli": "token-overlap" | {"url": "http://..."},
     "retrieval": {"alpha": 3.0, "max_candidates": 20, "min_score": 20.0,
                   "property_min_score": 20.0, "bm25_k1": 1.2, "bm25_b": 0.75},
     "fusion": {"boost_factor": 3.0, "literal_score": 1.0,
                "max_candidates_per_relation": 1024},
     "static_dir": "path or null"}

Environment variables override file values: KGFORGE_INDEX_DIR,
KGFORGE_SESSION_DIR, KGFORGE_LISTEN, KGFORGE_MAX_TEXT_LENGTH,
KGFORGE_GAZETTEER, KGFORGE_PATTERNS, KGFORGE_STATIC_DIR.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

from .discovery import (
    ConceptRecognizer,
    GazetteerRecognizer,
    HashedTrigramEmbedder,
)
from .fusion import FusionConfig, GraphConstructor, TokenOverlapNli
from .index import IndexBundle, RetrievalConfig, load_index
from .relations import PatternExtractor
from . import remote

logger = logging.getLogger(__name__)

ENV_PREFIX = "KGFORGE_"

_ENV_KEYS = {
    "INDEX_DIR": "index_dir",
    "SESSION_DIR": "session_dir",
    "LISTEN": "listen",
    "MAX_TEXT_LENGTH": "max_text_length",
    "GAZETTEER": "gazetteer",
    "PATTERNS": "patterns",
    "STATIC_DIR": "static_dir",
}


class ConfigError(ValueError):
    """Configuration missing, unreadable, or referencing absent paths."""


BackendSpec = Union[str, dict]


@dataclass
class AppConfig:
    index_dir: Optional[str] = None
    session_dir: Optional[str] = None
    listen: str = "127.0.0.1:8420"
    max_text_length: int = 50000
    gazetteer: Optional[str] = None
    patterns: Optional[str] = None
    recognizers: Tuple[str, ...] = ("gazetteer", "concepts")
    embedder: BackendSpec = "hashed-trigram"
    extractor: BackendSpec = "patterns"
    nli: BackendSpec = "token-overlap"
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    static_dir: Optional[str] = None

    @property
    def host_port(self) -> Tuple[str, int]:
        host, _, port = self.listen.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"bad listen address: {self.listen!r}")
        return host, int(port)

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None,
             env=os.environ) -> "AppConfig":
        raw = {}
        if path is not None:
            try:
                raw = json.loads(Path(path).read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}") \
                    from exc
            if not isinstance(raw, dict):
                raise ConfigError(f"config {path} must be a JSON object")
        for env_key, conf_key in _ENV_KEYS.items():
            value = env.get(ENV_PREFIX + env_key)
            if value is not None:
                raw[conf_key] = value
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "AppConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        try:
            if "recognizers" in kwargs:
                kwargs["recognizers"] = tuple(kwargs["recognizers"])
            if "max_text_length" in kwargs:
                kwargs["max_text_length"] = int(kwargs["max_text_length"])
            if "retrieval" in kwargs:
                kwargs["retrieval"] = RetrievalConfig(**kwargs["retrieval"])
            if "fusion" in kwargs:
                kwargs["fusion"] = FusionConfig(**kwargs["fusion"])
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def check_paths(self) -> None:
        """Fail fast on references to files that do not exist."""
        if self.index_dir is None:
            raise ConfigError("index_dir is required")
        for name in ("index_dir", "gazetteer", "patterns", "static_dir"):
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{name} does not exist: {value}")


def build_recognizers(config: AppConfig) -> List:
    recognizers = []
    for spec in config.recognizers:
        if isinstance(spec, dict):
            recognizers.append(remote.RemoteRecognizer(spec["url"]))
        elif spec == "gazetteer":
            if config.gazetteer:
                recognizers.append(GazetteerRecognizer.from_file(
                    config.gazetteer))
            else:
                logger.warning("no gazetteer file configured; the gazetteer "
                               "recognizer is skipped")
        elif spec == "concepts":
            recognizers.append(ConceptRecognizer())
        else:
            raise ConfigError(f"unknown recognizer: {spec!r}")
    return recognizers


def _build_embedder(config: AppConfig):
    if isinstance(config.embedder, dict):
        return remote.RemoteEmbedder(config.embedder["url"])
    if config.embedder == "hashed-trigram":
        return HashedTrigramEmbedder()
    raise ConfigError(f"unknown embedder: {config.embedder!r}")


def _build_extractor(config: AppConfig, recognizers: List):
    if isinstance(config.extractor, dict):
        return remote.RemoteExtractor(config.extractor["url"])
    if config.extractor == "patterns":
        if config.patterns:
            return PatternExtractor.from_file(config.patterns, recognizers)
        return PatternExtractor(recognizers)
    raise ConfigError(f"unknown extractor: {config.extractor!r}")


def _build_nli(config: AppConfig):
    if isinstance(config.nli, dict):
        return remote.RemoteNli(config.nli["url"])
    if config.nli == "token-overlap":
        return TokenOverlapNli()
    raise ConfigError(f"unknown NLI backend: {config.nli!r}")


def build_constructor(config: AppConfig,
                      bundle: Optional[IndexBundle] = None
                      ) -> GraphConstructor:
    """Wire up the full pipeline from configuration."""
    if bundle is None:
        if config.index_dir is None:
            raise ConfigError("index_dir is required")
        bundle = load_index(config.index_dir)
    recognizers = build_recognizers(config)
    return GraphConstructor(
        entities=bundle.entities,
        properties=bundle.properties,
        statements=bundle.statements,
        recognizers=recognizers,
        embedder=_build_embedder(config),
        extractor=_build_extractor(config, recognizers),
        nli=_build_nli(config),
        retrieval=config.retrieval,
        fusion=config.fusion,
    )
