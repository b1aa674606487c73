"""Engine facade: one object tying documents, workspace, and providers.

The CLI and the HTTP service both drive this surface, so any operation
sequence produces identical persisted state regardless of the front door.
Mutations are serialized behind a lock, guarded by an optional revision
check-and-set (first writer wins, the loser gets ConflictError), and every
mutation persists the workspace file atomically before returning.

Storage layout under the home directory:

    config.json        engine configuration (optional)
    workspace.json     the workspace file (+ workspace.assets/ sidecar)
    tank.json          holding-tank state, so CLI invocations compose
    docs/<doc_id>.json ingested and repaired document parses
"""

from __future__ import annotations

import copy
import json
import os
import threading
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

from . import discovery
from .docmodel import (
    PageRect,
    ParsedDocument,
    ingest_document,
    ingest_tei,
    merge_fragmented_sentences,
    serialize_document,
)
from .embeddings import build_provider
from .errors import ConflictError, NotFound, StorageError
from .highlights import (
    DEFAULT_AREA_LIMIT,
    DEFAULT_CONTEXT_WINDOW,
    DEFAULT_OVERLAP_THRESHOLD,
    Highlight,
    HighlightKind,
    ViewportTransform,
    capture_area,
    locate_sentences,
    resolve_context,
    to_document_space,
)
from .metadata import MetadataClient, MetadataConfig
from .store import (
    HoldingTank,
    PaperRef,
    Thread,
    Workspace,
    load_workspace,
    normalized_title,
    paper_to_dict,
    save_workspace,
    tank_from_dict,
    tank_to_dict,
)
from .suggest import DEFAULT_TOP_K, Suggestion, ThreadSuggester

DEFAULT_PORT = 7340
DEFAULT_BIND = "127.0.0.1"


@dataclass
class EngineConfig:
    home: Path
    workspace_id: str = "default"
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD
    context_window: int = DEFAULT_CONTEXT_WINDOW
    area_limit_bytes: int = DEFAULT_AREA_LIMIT
    suggestion_k: int = DEFAULT_TOP_K
    per_reference_fetch_cap: int = discovery.PER_REFERENCE_FETCH_CAP
    sample_size: int = discovery.SAMPLE_SIZE
    provider: dict = dataclass_field(default_factory=lambda: {"name": "hashed-bag-of-words", "dim": 64})
    metadata: dict = dataclass_field(default_factory=dict)
    service: dict = dataclass_field(default_factory=lambda: {"port": DEFAULT_PORT, "bind": DEFAULT_BIND})

    @classmethod
    def from_dict(cls, data: dict, home: Path) -> "EngineConfig":
        config = cls(home=Path(home))
        for key in (
            "workspace_id",
            "overlap_threshold",
            "context_window",
            "area_limit_bytes",
            "suggestion_k",
            "per_reference_fetch_cap",
            "sample_size",
        ):
            if key in data:
                setattr(config, key, data[key])
        config.provider = {**config.provider, **data.get("provider", {})}
        config.metadata = dict(data.get("metadata", {}))
        config.service = {**config.service, **data.get("service", {})}
        return config

    @classmethod
    def load(cls, home: Path | str) -> "EngineConfig":
        """Config from ``<home>/config.json``, defaults when absent."""
        home = Path(home)
        path = home / "config.json"
        if path.exists():
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise StorageError(f"cannot read config {path}: {exc}") from exc
            return cls.from_dict(data, home)
        return cls(home=home)

    def _resolve(self, value) -> Path | None:
        if value is None:
            return None
        path = Path(value)
        return path if path.is_absolute() else self.home / path

    def metadata_config(self) -> MetadataConfig:
        meta = self.metadata
        api_key = None
        env_name = meta.get("api_key_env", "THREADLOOM_API_KEY")
        if env_name:
            api_key = os.environ.get(env_name)
        return MetadataConfig(
            fixture_dir=self._resolve(meta.get("fixture_dir")),
            cache_dir=self._resolve(meta.get("cache_dir")),
            base_url=meta.get("base_url", MetadataConfig.base_url),
            api_key=api_key,
            rate_per_sec=float(meta.get("rate_per_sec", 5.0)),
            ttl_seconds=float(meta.get("ttl_days", 7.0)) * 86400.0,
            title_threshold=float(meta.get("title_threshold", 0.9)),
        )


class Engine:
    def __init__(self, config: EngineConfig, client: MetadataClient | None = None):
        self.config = config
        self.home = Path(config.home)
        self.home.mkdir(parents=True, exist_ok=True)
        self.docs_dir = self.home / "docs"
        self.docs_dir.mkdir(exist_ok=True)
        self.workspace_path = self.home / "workspace.json"
        self.tank_path = self.home / "tank.json"

        if self.workspace_path.exists():
            self.workspace = load_workspace(self.workspace_path)
        else:
            self.workspace = Workspace(workspace_id=config.workspace_id)
        if self.tank_path.exists():
            try:
                self.workspace.tank = tank_from_dict(json.loads(self.tank_path.read_text(encoding="utf-8")))
            except (OSError, json.JSONDecodeError) as exc:
                raise StorageError(f"cannot read tank state: {exc}") from exc

        self.client = client or MetadataClient(config.metadata_config())
        self.provider = build_provider(config.provider)
        self.suggester = ThreadSuggester(self.provider)
        self._docs: dict[str, ParsedDocument] = {}
        self._recommendations: dict[str, discovery.RecommendationSet] = {}
        self._lock = threading.RLock()

    # -- persistence --

    def _persist(self) -> None:
        save_workspace(self.workspace, self.workspace_path)
        data = json.dumps(tank_to_dict(self.workspace.tank), sort_keys=True, ensure_ascii=False, indent=2) + "\n"
        tmp = self.tank_path.with_name(self.tank_path.name + ".tmp")
        tmp.write_text(data, encoding="utf-8")
        os.replace(tmp, self.tank_path)

    def _mutate(self, expected_revision: int | None, fn):
        with self._lock:
            if expected_revision is not None and expected_revision != self.workspace.revision:
                raise ConflictError(
                    f"expected revision {expected_revision}, workspace is at {self.workspace.revision}"
                )
            result = fn()
            self._persist()
            return result

    # -- documents --

    def ingest(self, raw: bytes, tei: bool = False, expected_revision: int | None = None) -> dict:
        """Ingest a parse, repair fragmented sentences, cache the document,
        and register the opened paper in Unorganized."""
        doc = ingest_tei(raw) if tei else ingest_document(raw)
        doc = merge_fragmented_sentences(doc)

        def apply() -> dict:
            path = self.docs_dir / f"{doc.doc_id}.json"
            path.write_bytes(serialize_document(doc))
            self._docs[doc.doc_id] = doc
            self.workspace.register_open_paper(
                PaperRef(paper_id=f"doc:{doc.doc_id}", title=doc.title or doc.doc_id)
            )
            return {"doc_id": doc.doc_id, "sentences": len(doc.sentences), "revision": self.workspace.revision}

        return self._mutate(expected_revision, apply)

    def load_doc(self, doc_id: str) -> ParsedDocument:
        if doc_id in self._docs:
            return self._docs[doc_id]
        path = self.docs_dir / f"{doc_id}.json"
        if not path.exists():
            raise NotFound(f"no ingested document {doc_id!r}")
        doc = ingest_document(path.read_bytes())
        self._docs[doc_id] = doc
        return doc

    # -- highlights and the holding tank --

    def _default_transform(self, doc: ParsedDocument) -> ViewportTransform:
        return ViewportTransform(render_scale=1.0, page_offsets={p.index: (0.0, 0.0) for p in doc.pages})

    def highlight(
        self,
        doc_id: str,
        rects: list[PageRect],
        kind: HighlightKind = HighlightKind.TEXT,
        transform: ViewportTransform | None = None,
        image_bytes: bytes | None = None,
        expected_revision: int | None = None,
    ) -> dict:
        """Run the full pipeline: map, locate, resolve, stage, suggest."""
        doc = self.load_doc(doc_id)
        transform = transform or self._default_transform(doc)
        h = Highlight(doc_id=doc_id, kind=kind, rects=tuple(rects))
        rects_pts = to_document_space(h, transform)

        def apply() -> dict:
            if kind is HighlightKind.AREA:
                capture = capture_area(h, image_bytes or b"", limit=self.config.area_limit_bytes)
                self.workspace.tank_load_image(capture)
            else:
                core = locate_sentences(doc, rects_pts, overlap_threshold=self.config.overlap_threshold)
                if core:
                    ctx = resolve_context(doc, core, client=self.client, window=self.config.context_window)
                    self.workspace.tank_load(ctx)
                else:
                    self.workspace.tank_clear()
            suggestions = self.suggester.suggest_for_tank(self.workspace, self.workspace.tank, k=self.config.suggestion_k)
            return {
                "tank": self.tank_state(),
                "suggestions": [_suggestion_to_dict(s) for s in suggestions],
                "revision": self.workspace.revision,
            }

        return self._mutate(expected_revision, apply)

    def tank_state(self) -> dict:
        with self._lock:
            state = tank_to_dict(self.workspace.tank)
            state["modes"] = self.workspace.tank_allowed_modes()
            return state

    def tank_select(self, index: int, selected: bool, expected_revision: int | None = None) -> dict:
        def apply() -> dict:
            self.workspace.tank_set_selected(index, selected)
            return {"tank": self.tank_state(), "revision": self.workspace.revision}

        return self._mutate(expected_revision, apply)

    def tank_commit(
        self,
        mode: str,
        target: str | None = None,
        label: str | None = None,
        expected_revision: int | None = None,
    ) -> dict:
        def apply() -> dict:
            if mode == "NEW_THREAD":
                thread = self.workspace.commit_as_new_thread(label)
            elif mode == "REFS_TO":
                thread = self.workspace.commit_refs_to(target or "")
            elif mode == "CLIP_TO":
                thread = self.workspace.commit_clip_to(target or "")
            else:
                raise ValueError(f"unknown commit mode {mode!r}")
            return {"thread_id": thread.thread_id, "drawer": self.drawer(), "revision": self.workspace.revision}

        return self._mutate(expected_revision, apply)

    # -- thread CRUD --

    def create_thread(self, label: str, parent: str | None = None, expected_revision: int | None = None) -> dict:
        def apply() -> dict:
            thread = self.workspace.create_thread(label, parent_id=parent)
            return {"thread_id": thread.thread_id, "revision": self.workspace.revision}

        return self._mutate(expected_revision, apply)

    def rename_thread(self, thread_id: str, label: str, expected_revision: int | None = None) -> dict:
        def apply() -> dict:
            self.workspace.rename_thread(thread_id, label)
            return {"thread_id": thread_id, "revision": self.workspace.revision}

        return self._mutate(expected_revision, apply)

    def delete_thread(self, thread_id: str, confirm: bool = False, expected_revision: int | None = None) -> dict:
        def apply() -> dict:
            self.workspace.delete_thread(thread_id, confirm=confirm)
            self._recommendations.pop(thread_id, None)
            return {"revision": self.workspace.revision}

        return self._mutate(expected_revision, apply)

    def move_thread(
        self,
        thread_id: str,
        new_parent: str | None,
        position: int | None = None,
        expected_revision: int | None = None,
    ) -> dict:
        def apply() -> dict:
            self.workspace.move_node(thread_id, new_parent, position)
            return {"drawer": self.drawer(), "revision": self.workspace.revision}

        return self._mutate(expected_revision, apply)

    def move_paper(self, src: str, paper: str, dst: str, expected_revision: int | None = None) -> dict:
        def apply() -> dict:
            self.workspace.move_paper(src, paper, dst)
            return {"drawer": self.drawer(), "revision": self.workspace.revision}

        return self._mutate(expected_revision, apply)

    def edit_clip(self, clip_id: str, text: str, expected_revision: int | None = None) -> dict:
        def apply() -> dict:
            self.workspace.edit_clip(clip_id, text)
            return {"revision": self.workspace.revision}

        return self._mutate(expected_revision, apply)

    # -- read-only views --

    def workspace_info(self) -> dict:
        return {"workspace_id": self.workspace.workspace_id, "revision": self.workspace.revision}

    def _is_current(self, paper: PaperRef) -> bool:
        if self.workspace.current_paper is None:
            return False
        current = self.workspace.current_paper
        if paper.paper_id and paper.paper_id == current:
            return True
        return bool(paper.title) and f"title:{normalized_title(paper.title)}" == current

    def _thread_summary(self, thread: Thread) -> dict:
        clip_count = len(thread.clips)
        noun = "clip" if clip_count == 1 else "clips"
        return {
            "thread_id": thread.thread_id,
            "label": thread.label,
            "clip_count": clip_count,
            "clip_counter": f"{clip_count} {noun}. View details" if clip_count else "",
            "nested_count": sum(len(t.children) + len(t.papers) + len(t.clips) for t in thread.walk()),
            "last_additive_change": thread.last_additive_change,
            "papers": [
                {**paper_to_dict(p), "is_current": self._is_current(p)} for p in thread.papers
            ],
            "children": [self._thread_summary(c) for c in thread.children],
        }

    def drawer(self) -> list[dict]:
        with self._lock:
            return [self._thread_summary(t) for t in self.workspace.drawer()]

    def suggest(self, text: str, k: int | None = None) -> list[dict]:
        with self._lock:
            suggestions = self.suggester.suggest(self.workspace, text, k=k or self.config.suggestion_k)
        return [_suggestion_to_dict(s) for s in suggestions]

    def recommend(self, thread_id: str, refresh: bool = False) -> dict:
        # Snapshot under the lock, fetch outside it: a slow recommendation
        # fetch must never block drawer mutations.
        with self._lock:
            cached = self._recommendations.get(thread_id)
            if cached is not None and not refresh:
                return _recommendations_to_dict(cached)
            snapshot = copy.deepcopy(self.workspace.require_thread(thread_id))
            revision = self.workspace.revision
        result = discovery.refresh_thread(
            snapshot,
            revision,
            self.client,
            per_ref_limit=self.config.per_reference_fetch_cap,
            sample_size=self.config.sample_size,
        )
        with self._lock:
            self._recommendations[thread_id] = result
        return _recommendations_to_dict(result)

    def overview(self, thread_id: str) -> dict:
        with self._lock:
            return discovery.build_overview(self.workspace, thread_id, self._recommendations.get(thread_id))

    def export_outline(self, thread_id: str) -> str:
        with self._lock:
            return discovery.export_outline(self.workspace, thread_id, self._recommendations.get(thread_id))


def _suggestion_to_dict(s: Suggestion) -> dict:
    return {
        "thread_id": s.thread_id,
        "label": s.label,
        "score": s.score,
        "chain_objective": s.chain_objective,
    }


def _recommendations_to_dict(result: discovery.RecommendationSet) -> dict:
    return {
        "thread_id": result.thread_id,
        "revision": result.revision,
        "recommendations": [discovery.recommendation_to_dict(r) for r in result.items],
    }
