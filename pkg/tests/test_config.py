import json
import logging

import pytest

from kgforge.config import (
    AppConfig,
    ConfigError,
    _build_embedder,
    _build_extractor,
    _build_nli,
    build_constructor,
    build_recognizers,
)
from kgforge.discovery import (
    ConceptRecognizer,
    GazetteerRecognizer,
    HashedTrigramEmbedder,
)
from kgforge.fusion import TokenOverlapNli
from kgforge.relations import PatternExtractor
from kgforge.remote import (
    RemoteEmbedder,
    RemoteExtractor,
    RemoteNli,
    RemoteRecognizer,
)

WD = "http://www.wikidata.org/entity/"


class TestAppConfig:
    def test_defaults(self):
        config = AppConfig()
        assert config.listen == "127.0.0.1:8420"
        assert config.max_text_length == 50000
        assert config.recognizers == ("gazetteer", "concepts")
        assert config.embedder == "hashed-trigram"
        assert config.extractor == "patterns"
        assert config.nli == "token-overlap"
        assert config.retrieval.alpha == 3.0
        assert config.fusion.boost_factor == 3.0

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="indexdir"):
            AppConfig.from_dict({"indexdir": "/tmp"})

    def test_nested_sections_parsed(self):
        config = AppConfig.from_dict({
            "retrieval": {"alpha": 2.0, "min_score": 5.0},
            "fusion": {"boost_factor": 2.0},
        })
        assert config.retrieval.alpha == 2.0
        assert config.retrieval.min_score == 5.0
        assert config.fusion.boost_factor == 2.0

    @pytest.mark.parametrize("raw", [
        {"retrieval": {"alpha": 0.5}},
        {"retrieval": {"alphaa": 3.0}},
        {"fusion": {"boost_factor": 0.0}},
        {"max_text_length": "not a number"},
        {"recognizers": 7},
    ])
    def test_bad_values_raise_config_error(self, raw):
        with pytest.raises(ConfigError):
            AppConfig.from_dict(raw)

    def test_load_file_with_env_override(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"listen": "0.0.0.0:9000",
                                    "max_text_length": 100}),
                        encoding="utf-8")
        config = AppConfig.load(path, env={
            "KGFORGE_LISTEN": "127.0.0.1:8001",
            "KGFORGE_MAX_TEXT_LENGTH": "123",
        })
        assert config.listen == "127.0.0.1:8001"
        assert config.max_text_length == 123

    def test_load_env_only(self):
        config = AppConfig.load(env={"KGFORGE_INDEX_DIR": "/somewhere"})
        assert config.index_dir == "/somewhere"

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            AppConfig.load(tmp_path / "nope.json", env={})

    def test_load_invalid_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid JSON"):
            AppConfig.load(path, env={})

    def test_load_non_object(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ConfigError, match="JSON object"):
            AppConfig.load(path, env={})

    def test_host_port(self):
        assert AppConfig(listen="0.0.0.0:9000").host_port == ("0.0.0.0", 9000)

    @pytest.mark.parametrize("listen", ["8420", "host:", ":8420", "host:abc"])
    def test_bad_listen_rejected(self, listen):
        with pytest.raises(ConfigError):
            AppConfig(listen=listen).host_port

    def test_check_paths_requires_index_dir(self):
        with pytest.raises(ConfigError, match="index_dir"):
            AppConfig().check_paths()

    def test_check_paths_flags_missing_file(self, tmp_path):
        config = AppConfig(index_dir=str(tmp_path),
                           gazetteer=str(tmp_path / "missing.tsv"))
        with pytest.raises(ConfigError, match="gazetteer"):
            config.check_paths()

    def test_check_paths_accepts_existing(self, tmp_path, fixtures_dir):
        config = AppConfig(index_dir=str(tmp_path),
                           gazetteer=str(fixtures_dir / "gazetteer_main.tsv"))
        config.check_paths()


class TestBuildRecognizers:
    def test_default_stack(self, fixtures_dir):
        config = AppConfig(gazetteer=str(fixtures_dir / "gazetteer_main.tsv"))
        recognizers = build_recognizers(config)
        assert isinstance(recognizers[0], GazetteerRecognizer)
        assert isinstance(recognizers[1], ConceptRecognizer)

    def test_gazetteer_skipped_without_file(self, caplog):
        with caplog.at_level(logging.WARNING):
            recognizers = build_recognizers(AppConfig())
        assert len(recognizers) == 1
        assert isinstance(recognizers[0], ConceptRecognizer)
        assert any("gazetteer" in r.message for r in caplog.records)

    def test_remote_spec(self):
        config = AppConfig(recognizers=({"url": "http://ner.local/api"},))
        recognizers = build_recognizers(config)
        assert isinstance(recognizers[0], RemoteRecognizer)
        assert recognizers[0].url == "http://ner.local/api"

    def test_unknown_recognizer(self):
        with pytest.raises(ConfigError, match="spacy"):
            build_recognizers(AppConfig(recognizers=("spacy",)))


class TestBackendBuilders:
    def test_embedder_variants(self):
        assert isinstance(_build_embedder(AppConfig()),
                          HashedTrigramEmbedder)
        remote = _build_embedder(
            AppConfig(embedder={"url": "http://emb.local"}))
        assert isinstance(remote, RemoteEmbedder)
        with pytest.raises(ConfigError):
            _build_embedder(AppConfig(embedder="word2vec"))

    def test_extractor_variants(self, tmp_path):
        table = tmp_path / "patterns.tsv"
        table.write_text("<X> is a <NP>\tinstance of\n", encoding="utf-8")
        ext = _build_extractor(AppConfig(patterns=str(table)), [])
        assert isinstance(ext, PatternExtractor)
        assert len(ext.patterns) == 1
        default = _build_extractor(AppConfig(), [])
        assert len(default.patterns) == len(PatternExtractor.DEFAULT_TABLE)
        remote = _build_extractor(
            AppConfig(extractor={"url": "http://re.local"}), [])
        assert isinstance(remote, RemoteExtractor)
        with pytest.raises(ConfigError):
            _build_extractor(AppConfig(extractor="openie"), [])

    def test_nli_variants(self):
        assert isinstance(_build_nli(AppConfig()), TokenOverlapNli)
        remote = _build_nli(AppConfig(nli={"url": "http://nli.local"}))
        assert isinstance(remote, RemoteNli)
        with pytest.raises(ConfigError):
            _build_nli(AppConfig(nli="roberta"))


class TestBuildConstructor:
    def test_requires_index_dir_without_bundle(self):
        with pytest.raises(ConfigError, match="index_dir"):
            build_constructor(AppConfig())

    def test_loads_index_from_directory(self, main_index_dir, fixtures_dir):
        config = AppConfig(
            index_dir=str(main_index_dir),
            gazetteer=str(fixtures_dir / "gazetteer_main.tsv"),
            patterns=str(fixtures_dir / "patterns_main.tsv"))
        constructor = build_constructor(config)
        graph = constructor.construct("Weimar is a city in Germany.")
        assert [t.predicate.iri.value for t in graph.triples] == \
            ["http://www.wikidata.org/prop/direct/P17"]

    def test_explicit_bundle_used(self, main_bundle, fixtures_dir):
        config = AppConfig(
            gazetteer=str(fixtures_dir / "gazetteer_main.tsv"),
            patterns=str(fixtures_dir / "patterns_main.tsv"))
        constructor = build_constructor(config, bundle=main_bundle)
        assert constructor.entities is main_bundle.entities
        assert constructor.properties is main_bundle.properties
