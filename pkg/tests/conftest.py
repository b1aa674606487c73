from __future__ import annotations

import json
import socket
from pathlib import Path

import pytest

from threadloom.docmodel import ParsedDocument, ingest_document
from threadloom.engine import Engine, EngineConfig
from threadloom.metadata import QueryKind, write_fixture

FIXTURES = Path(__file__).parent / "fixtures"

_RECORD_FIELDS = ("paper_id", "title", "year", "tldr", "url", "embedding", "citation_contexts")


@pytest.fixture(autouse=True, scope="session")
def no_external_network():
    """The whole suite runs with networking disabled (loopback excepted)."""
    real_connect = socket.socket.connect

    def guarded_connect(self, address, *args, **kwargs):
        if isinstance(address, tuple) and address:
            host = address[0]
            if isinstance(host, str) and host not in ("127.0.0.1", "localhost", "::1", ""):
                raise RuntimeError(f"test suite attempted external network access: {host!r}")
        return real_connect(self, address, *args, **kwargs)

    socket.socket.connect = guarded_connect
    try:
        yield
    finally:
        socket.socket.connect = real_connect


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_fixture_doc(name: str) -> ParsedDocument:
    return ingest_document(fixture_path(name).read_bytes())


@pytest.fixture
def doc_small() -> ParsedDocument:
    return load_fixture_doc("doc_small.json")


def corpus_record(paper: dict) -> dict:
    return {field: paper.get(field) for field in _RECORD_FIELDS}


def load_corpus() -> dict:
    return json.loads(fixture_path("paper_corpus.json").read_text(encoding="utf-8"))


def build_metadata_fixtures(dest: Path, corpus: dict | None = None, citation_limits=(1000,)) -> Path:
    """Materialize fingerprinted fixture files for the metadata client."""
    corpus = corpus or load_corpus()
    papers = corpus["papers"]
    dest.mkdir(parents=True, exist_ok=True)
    for paper in papers:
        write_fixture(dest, QueryKind.BY_ID, paper["paper_id"], {"paper": corpus_record(paper)})
        write_fixture(dest, QueryKind.BY_TITLE, paper["title"], {"results": [corpus_record(paper)]})
    for title in corpus.get("absent_titles", []):
        write_fixture(dest, QueryKind.BY_TITLE, title, {"results": []})
    for paper in papers:
        citers = [corpus_record(c) for c in papers if paper["paper_id"] in c.get("cites", [])]
        for limit in citation_limits:
            write_fixture(
                dest, QueryKind.CITATIONS_OF, paper["paper_id"], {"found": True, "citations": citers}, limit=limit
            )
    return dest


@pytest.fixture(scope="session")
def metadata_fixture_dir(tmp_path_factory) -> Path:
    return build_metadata_fixtures(tmp_path_factory.mktemp("metadata-fixtures"))


def write_engine_home(home: Path, fixture_dir: Path, **overrides) -> Path:
    home.mkdir(parents=True, exist_ok=True)
    config = {
        "workspace_id": "test",
        "provider": {"name": "hashed-bag-of-words", "dim": 64, "seed": "test"},
        "metadata": {"fixture_dir": str(fixture_dir)},
    }
    config.update(overrides)
    (home / "config.json").write_text(json.dumps(config, indent=2), encoding="utf-8")
    return home


@pytest.fixture
def engine_factory(tmp_path, metadata_fixture_dir):
    def make(name: str = "home", **overrides) -> Engine:
        home = write_engine_home(tmp_path / name, metadata_fixture_dir, **overrides)
        return Engine(EngineConfig.load(home))

    return make
