"""Persistent hierarchical workspace of threads, clips, and paper references.

Ordering and identity rules:

* The distinguished "Unorganized Papers" thread is always first in drawer
  order, holds every opened paper pending filing, and never nests or moves.
* Remaining top-level threads sort by the most recent additive change in
  their subtree (adding a clip, paper, or child thread; renames and moves
  do not reorder).
* Paper identity for dedup is the external paper id when present, else the
  normalized title, so papers dedup even when metadata resolution failed.

All "timestamps" are logical: the workspace revision at the time of the
change. That keeps every persisted byte reproducible, which replay tests
and the check-and-set protocol rely on. The workspace itself is a plain
in-memory structure; callers (the engine) serialize writers and persist
after each mutation.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .docmodel import Rect
from .errors import (
    CannotMoveUnorganized,
    ConfirmationRequired,
    CycleError,
    EmptyCommit,
    InvariantError,
    NoSuchThread,
    NotInTank,
    StorageError,
)
from .highlights import AreaCapture, CitationContext, ResolvedRef, context_from_dict, context_to_dict

UNORGANIZED_ID = "unorganized"
UNORGANIZED_LABEL = "Unorganized Papers"
WORKSPACE_FORMAT_VERSION = 1
MAX_DERIVED_LABEL = 60

_WS_RE = re.compile(r"\s+")


class ClipKind(enum.Enum):
    TEXT = "TEXT"
    IMAGE = "IMAGE"


@dataclass(frozen=True)
class ClipSource:
    doc_id: str
    page: int | None = None
    rects: tuple[Rect, ...] | None = None
    sentences: tuple[int, ...] | None = None
    context_id: str | None = None


@dataclass
class Clip:
    clip_id: str
    kind: ClipKind
    payload: str | bytes
    source: ClipSource
    created_at: int = 0


def normalized_title(title: str) -> str:
    return _WS_RE.sub(" ", re.sub(r"[^\w\s]", "", title.lower())).strip()


@dataclass
class PaperRef:
    paper_id: str | None = None
    title: str | None = None
    year: int | None = None
    tldr: str | None = None
    url: str | None = None
    source_context: str | None = None
    surface: str | None = None

    def __post_init__(self):
        if not self.paper_id and not (self.title and self.title.strip()):
            raise InvariantError("paper ref needs an external id or a title")

    def identity_keys(self) -> frozenset[str]:
        # Cached: paper_id/title never change after construction, and dedup
        # checks hit this on every paper in the workspace.
        cached = getattr(self, "_identity_keys", None)
        if cached is not None:
            return cached
        keys = set()
        if self.paper_id:
            keys.add(f"id:{self.paper_id}")
        if self.title and self.title.strip():
            keys.add(f"title:{normalized_title(self.title)}")
        frozen = frozenset(keys)
        object.__setattr__(self, "_identity_keys", frozen)
        return frozen


def same_paper(a: PaperRef, b: PaperRef) -> bool:
    return bool(a.identity_keys() & b.identity_keys())


@dataclass
class Thread:
    thread_id: str
    label: str
    children: list["Thread"] = field(default_factory=list)
    clips: list[Clip] = field(default_factory=list)
    papers: list[PaperRef] = field(default_factory=list)
    last_additive_change: int = 0
    # Transient label-embedding cache; never persisted, dropped on rename.
    embedding: tuple[float, ...] | None = None
    embedding_fingerprint: str | None = None

    def has_paper(self, ref: PaperRef) -> bool:
        return any(same_paper(existing, ref) for existing in self.papers)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def invalidate_embedding(self) -> None:
        self.embedding = None
        self.embedding_fingerprint = None


@dataclass
class HoldingTank:
    context: CitationContext | None = None
    selected: tuple[int, ...] = ()
    image_clip: AreaCapture | None = None

    def is_empty(self) -> bool:
        return self.context is None and self.image_clip is None

    def selected_refs(self) -> list[ResolvedRef]:
        if self.context is None:
            return []
        return [self.context.resolved[i] for i in self.selected]


class Workspace:
    """In-memory workspace; not thread-safe, callers serialize writers."""

    def __init__(self, workspace_id: str = "default"):
        self.workspace_id = workspace_id
        self.revision = 0
        self.unorganized = Thread(thread_id=UNORGANIZED_ID, label=UNORGANIZED_LABEL)
        self.threads: list[Thread] = []
        self.tank = HoldingTank()
        self.current_paper: str | None = None
        self._counters = {"thread": 0, "clip": 0}

    # -- plumbing --

    def _bump(self) -> int:
        self.revision += 1
        return self.revision

    def _next_id(self, kind: str) -> str:
        self._counters[kind] += 1
        prefix = {"thread": "t", "clip": "c"}[kind]
        return f"{prefix}{self._counters[kind]:04d}"

    def _resort_top_level(self) -> None:
        self.threads.sort(key=lambda t: (-subtree_stamp(t), t.thread_id))

    def all_threads(self, include_unorganized: bool = True):
        if include_unorganized:
            yield from self.unorganized.walk()
        for t in self.threads:
            yield from t.walk()

    def find_thread(self, thread_id: str) -> Thread | None:
        for t in self.all_threads():
            if t.thread_id == thread_id:
                return t
        return None

    def require_thread(self, thread_id: str) -> Thread:
        t = self.find_thread(thread_id)
        if t is None:
            raise NoSuchThread(f"no thread {thread_id!r}")
        return t

    def parent_of(self, thread_id: str) -> Thread | None:
        for t in self.all_threads():
            if any(c.thread_id == thread_id for c in t.children):
                return t
        return None

    def top_level_ancestor(self, thread_id: str) -> Thread:
        node = self.require_thread(thread_id)
        parent = self.parent_of(node.thread_id)
        while parent is not None:
            node = parent
            parent = self.parent_of(node.thread_id)
        return node

    def drawer(self) -> list[Thread]:
        """Presentation order: Unorganized first, then recency-sorted roots."""
        return [self.unorganized] + list(self.threads)

    def count_items(self) -> int:
        return sum(len(t.clips) + len(t.papers) for t in self.all_threads())

    # -- holding tank --

    def tank_load(self, ctx: CitationContext) -> HoldingTank:
        """Stage a context with every resolved reference selected by default."""
        self.tank = HoldingTank(context=ctx, selected=tuple(range(len(ctx.resolved))))
        self._bump()
        return self.tank

    def tank_load_image(self, capture: AreaCapture) -> HoldingTank:
        self.tank = HoldingTank(image_clip=capture)
        self._bump()
        return self.tank

    def tank_clear(self) -> HoldingTank:
        self.tank = HoldingTank()
        self._bump()
        return self.tank

    def tank_set_selected(self, index: int, selected: bool) -> HoldingTank:
        if self.tank.context is None or not (0 <= index < len(self.tank.context.resolved)):
            raise NotInTank(f"no reference {index} in the holding tank")
        current = set(self.tank.selected)
        if selected:
            current.add(index)
        else:
            current.discard(index)
        self.tank.selected = tuple(sorted(current))
        self._bump()
        return self.tank

    def tank_allowed_modes(self) -> dict[str, bool]:
        """Which commit buttons a client may activate for the current tank."""
        has_content = self.tank.context is not None or self.tank.image_clip is not None
        has_refs = bool(self.tank.selected)
        return {
            "NEW_THREAD": has_content,
            "REFS_TO": has_refs,
            "CLIP_TO": has_content,
        }

    # -- commits --

    def _context_clip(self, ctx: CitationContext) -> Clip:
        return Clip(
            clip_id=self._next_id("clip"),
            kind=ClipKind.TEXT,
            payload=ctx.text,
            source=ClipSource(doc_id=ctx.doc_id, sentences=ctx.context_sentences, context_id=ctx.context_id),
            created_at=self.revision,
        )

    def _image_clip(self, capture: AreaCapture) -> Clip:
        return Clip(
            clip_id=self._next_id("clip"),
            kind=ClipKind.IMAGE,
            payload=capture.image_bytes,
            source=ClipSource(doc_id=capture.doc_id, page=capture.page, rects=(capture.rect,)),
            created_at=self.revision,
        )

    def _paper_from_resolved(self, ref: ResolvedRef, context_id: str | None) -> PaperRef | None:
        if ref.paper is not None:
            return PaperRef(
                paper_id=ref.paper.paper_id,
                title=ref.paper.title or (ref.entry.title if ref.entry else None),
                year=ref.paper.year,
                tldr=ref.paper.tldr,
                url=ref.paper.url,
                source_context=context_id,
                surface=ref.marker.surface,
            )
        if ref.entry is not None:
            title = ref.entry.title or ref.entry.raw_text
            if not title.strip():
                return None
            return PaperRef(
                paper_id=ref.entry.resolved_paper_id,
                title=title,
                year=ref.entry.year,
                source_context=context_id,
                surface=ref.marker.surface,
            )
        return None

    def _selected_papers(self) -> list[PaperRef]:
        ctx = self.tank.context
        papers = []
        for ref in self.tank.selected_refs():
            paper = self._paper_from_resolved(ref, ctx.context_id if ctx else None)
            if paper is not None:
                papers.append(paper)
        return papers

    def _add_papers(self, thread: Thread, papers: list[PaperRef]) -> int:
        added = 0
        for paper in papers:
            if not thread.has_paper(paper):
                thread.papers.append(paper)
                added += 1
        return added

    def commit_as_new_thread(self, label: str | None) -> Thread:
        label = (label or "").strip()
        if not label and self.tank.is_empty():
            raise EmptyCommit("nothing staged and no label given")
        if not label:
            source = self.tank.context.text if self.tank.context else "image clip"
            label = source[:MAX_DERIVED_LABEL].strip() or "untitled thread"

        stamp = self._bump()
        thread = Thread(thread_id=self._next_id("thread"), label=label, last_additive_change=stamp)
        if self.tank.context is not None:
            thread.clips.append(self._context_clip(self.tank.context))
        if self.tank.image_clip is not None:
            thread.clips.append(self._image_clip(self.tank.image_clip))
        self._add_papers(thread, self._selected_papers())
        self.threads.append(thread)
        self._resort_top_level()
        self.tank = HoldingTank()
        return thread

    def commit_refs_to(self, thread_id: str) -> Thread:
        target = self.require_thread(thread_id)
        papers = self._selected_papers()
        if not papers:
            raise EmptyCommit("no selected references in the holding tank")
        stamp = self._bump()
        self._add_papers(target, papers)
        target.last_additive_change = stamp
        self._resort_top_level()
        self.tank = HoldingTank()
        return target

    def commit_clip_to(self, thread_id: str) -> Thread:
        target = self.require_thread(thread_id)
        if target.thread_id == UNORGANIZED_ID:
            raise InvariantError("the unorganized thread holds papers only")
        if self.tank.is_empty():
            raise EmptyCommit("no content in the holding tank")
        stamp = self._bump()
        if self.tank.context is not None:
            target.clips.append(self._context_clip(self.tank.context))
        if self.tank.image_clip is not None:
            target.clips.append(self._image_clip(self.tank.image_clip))
        target.last_additive_change = stamp
        self._resort_top_level()
        self.tank = HoldingTank()
        return target

    # -- thread CRUD and moves --

    def create_thread(self, label: str, parent_id: str | None = None) -> Thread:
        label = (label or "").strip()
        if not label:
            raise InvariantError("thread label must be non-empty")
        parent = None
        if parent_id is not None:
            parent = self.require_thread(parent_id)
            if parent.thread_id == UNORGANIZED_ID:
                raise InvariantError("the unorganized thread cannot have child threads")
        stamp = self._bump()
        thread = Thread(thread_id=self._next_id("thread"), label=label, last_additive_change=stamp)
        if parent is None:
            self.threads.append(thread)
        else:
            parent.children.append(thread)
            parent.last_additive_change = stamp
        self._resort_top_level()
        return thread

    def _detach(self, thread_id: str) -> Thread:
        for i, t in enumerate(self.threads):
            if t.thread_id == thread_id:
                return self.threads.pop(i)
        parent = self.parent_of(thread_id)
        if parent is None:
            raise NoSuchThread(f"no thread {thread_id!r}")
        for i, t in enumerate(parent.children):
            if t.thread_id == thread_id:
                return parent.children.pop(i)
        raise NoSuchThread(f"no thread {thread_id!r}")

    def move_node(self, thread_id: str, new_parent_id: str | None, position: int | None = None) -> Thread:
        """Re-home a thread; forest shape and item counts are preserved."""
        if thread_id == UNORGANIZED_ID:
            raise CannotMoveUnorganized("the unorganized thread stays put")
        node = self.require_thread(thread_id)
        if new_parent_id is not None:
            new_parent = self.require_thread(new_parent_id)
            if new_parent.thread_id == UNORGANIZED_ID:
                raise InvariantError("the unorganized thread cannot have child threads")
            if any(t.thread_id == new_parent_id for t in node.walk()):
                raise CycleError(f"{new_parent_id!r} is inside {thread_id!r}")
        self._bump()
        detached = self._detach(thread_id)
        if new_parent_id is None:
            self.threads.append(detached)
        else:
            children = self.require_thread(new_parent_id).children
            slot = len(children) if position is None else max(0, min(position, len(children)))
            children.insert(slot, detached)
        self._resort_top_level()
        return node

    def move_paper(self, src_thread_id: str, paper_id_or_title: str, dst_thread_id: str) -> PaperRef:
        src = self.require_thread(src_thread_id)
        dst = self.require_thread(dst_thread_id)
        needle = None
        for paper in src.papers:
            if paper.paper_id == paper_id_or_title or (
                paper.title and normalized_title(paper.title) == normalized_title(paper_id_or_title)
            ):
                needle = paper
                break
        if needle is None:
            raise NoSuchThread(f"thread {src_thread_id!r} has no paper {paper_id_or_title!r}")
        stamp = self._bump()
        src.papers.remove(needle)
        if not dst.has_paper(needle):
            dst.papers.append(needle)
        dst.last_additive_change = stamp
        self._resort_top_level()
        return needle

    def register_open_paper(self, paper: PaperRef) -> bool:
        """Add an opened paper to Unorganized unless it is filed anywhere.

        Returns True when the paper was appended. The current-paper flag
        always moves to the opened paper.
        """
        self._bump()
        self.current_paper = paper.paper_id or f"title:{normalized_title(paper.title or '')}"
        for t in self.all_threads():
            if t.has_paper(paper):
                return False
        self.unorganized.papers.append(paper)
        return True

    def rename_thread(self, thread_id: str, label: str) -> Thread:
        label = (label or "").strip()
        if not label:
            raise InvariantError("thread label must be non-empty")
        if thread_id == UNORGANIZED_ID:
            raise InvariantError("the unorganized thread cannot be renamed")
        thread = self.require_thread(thread_id)
        self._bump()
        thread.label = label
        thread.invalidate_embedding()
        return thread

    def edit_clip(self, clip_id: str, text: str) -> Clip:
        if not text.strip():
            raise InvariantError("clip text must be non-empty")
        for t in self.all_threads():
            for clip in t.clips:
                if clip.clip_id == clip_id:
                    if clip.kind is not ClipKind.TEXT:
                        raise InvariantError("only text clips are editable")
                    self._bump()
                    clip.payload = text
                    return clip
        raise NoSuchThread(f"no clip {clip_id!r}")

    def delete_thread(self, thread_id: str, confirm: bool = False) -> Thread:
        if thread_id == UNORGANIZED_ID:
            raise InvariantError("the unorganized thread cannot be deleted")
        node = self.require_thread(thread_id)
        if (node.children or node.clips or node.papers) and not confirm:
            raise ConfirmationRequired(f"deleting {thread_id!r} discards its contents; pass confirm")
        self._bump()
        detached = self._detach(thread_id)
        # Removing a subtree can lower its root's recency stamp.
        self._resort_top_level()
        return detached

    # -- validation --

    def validate(self) -> None:
        """Check every workspace invariant; raises InvariantError."""
        if self.unorganized.thread_id != UNORGANIZED_ID:
            raise InvariantError("unorganized thread has the wrong id")
        if self.unorganized.children:
            raise InvariantError("unorganized thread must not have children")

        seen_ids: set[str] = set()
        seen_clip_ids: set[str] = set()
        for t in self.all_threads():
            if t.thread_id in seen_ids:
                raise InvariantError(f"duplicate thread id {t.thread_id!r}")
            seen_ids.add(t.thread_id)
            if not t.label.strip():
                raise InvariantError(f"thread {t.thread_id!r} has an empty label")
            if t.last_additive_change > self.revision:
                raise InvariantError(f"thread {t.thread_id!r} stamped after current revision")
            seen_paper_keys: set[str] = set()
            for paper in t.papers:
                keys = paper.identity_keys()
                if keys & seen_paper_keys:
                    raise InvariantError(f"thread {t.thread_id!r} holds duplicate paper {keys}")
                seen_paper_keys.update(keys)
            for clip in t.clips:
                if clip.clip_id in seen_clip_ids:
                    raise InvariantError(f"duplicate clip id {clip.clip_id!r}")
                seen_clip_ids.add(clip.clip_id)
                if clip.kind is ClipKind.TEXT and not str(clip.payload).strip():
                    raise InvariantError(f"text clip {clip.clip_id!r} is empty")
                if clip.kind is ClipKind.IMAGE and not isinstance(clip.payload, bytes):
                    raise InvariantError(f"image clip {clip.clip_id!r} payload must be bytes")

        expected = sorted(self.threads, key=lambda t: (-subtree_stamp(t), t.thread_id))
        if [t.thread_id for t in expected] != [t.thread_id for t in self.threads]:
            raise InvariantError("top-level threads out of drawer order")

        if self.tank.context is not None:
            count = len(self.tank.context.resolved)
            if any(not (0 <= i < count) for i in self.tank.selected):
                raise InvariantError("tank selection outside resolved references")
        elif self.tank.selected:
            raise InvariantError("tank selection without a context")


def subtree_stamp(thread: Thread) -> int:
    return max(t.last_additive_change for t in thread.walk())


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def clip_to_dict(clip: Clip) -> dict:
    if clip.kind is ClipKind.IMAGE:
        payload = {"image": hashlib.sha256(clip.payload).hexdigest()}
    else:
        payload = {"text": clip.payload}
    return {
        "clip_id": clip.clip_id,
        "kind": clip.kind.value,
        "created_at": clip.created_at,
        "payload": payload,
        "source": {
            "doc_id": clip.source.doc_id,
            "page": clip.source.page,
            "rects": [[r.x, r.y, r.w, r.h] for r in clip.source.rects] if clip.source.rects else None,
            "sentences": list(clip.source.sentences) if clip.source.sentences else None,
            "context_id": clip.source.context_id,
        },
    }


def paper_to_dict(paper: PaperRef) -> dict:
    return {
        "paper_id": paper.paper_id,
        "title": paper.title,
        "year": paper.year,
        "tldr": paper.tldr,
        "url": paper.url,
        "source_context": paper.source_context,
        "surface": paper.surface,
    }


def _thread_to_dict(thread: Thread) -> dict:
    return {
        "thread_id": thread.thread_id,
        "label": thread.label,
        "last_additive_change": thread.last_additive_change,
        "children": [_thread_to_dict(c) for c in thread.children],
        "clips": [clip_to_dict(c) for c in thread.clips],
        "papers": [paper_to_dict(p) for p in thread.papers],
    }


def workspace_to_dict(ws: Workspace) -> dict:
    return {
        "version": WORKSPACE_FORMAT_VERSION,
        "workspace_id": ws.workspace_id,
        "revision": ws.revision,
        "current_paper": ws.current_paper,
        "counters": dict(ws._counters),
        "threads": [_thread_to_dict(t) for t in ws.drawer()],
    }


def _assets_dir(path: Path) -> Path:
    return path.parent / f"{path.stem}.assets"


def _collect_images(ws: Workspace) -> dict[str, bytes]:
    images = {}
    for t in ws.all_threads():
        for clip in t.clips:
            if clip.kind is ClipKind.IMAGE:
                images[hashlib.sha256(clip.payload).hexdigest()] = clip.payload
    return images


def save_workspace(ws: Workspace, path: Path | str) -> None:
    """Atomic write: sidecar image files first, then temp-write-rename."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        images = _collect_images(ws)
        if images:
            assets = _assets_dir(path)
            assets.mkdir(parents=True, exist_ok=True)
            for digest, blob in images.items():
                target = assets / f"{digest}.bin"
                if not target.exists():
                    tmp = assets / f"{digest}.tmp"
                    tmp.write_bytes(blob)
                    tmp.replace(target)
        data = json.dumps(workspace_to_dict(ws), sort_keys=True, ensure_ascii=False, indent=2) + "\n"
        tmp_path = path.with_name(path.name + ".tmp")
        tmp_path.write_text(data, encoding="utf-8")
        os.replace(tmp_path, path)
    except OSError as exc:
        raise StorageError(f"cannot persist workspace: {exc}") from exc


def _clip_from_dict(data: dict, assets: Path) -> Clip:
    kind = ClipKind(data["kind"])
    if kind is ClipKind.IMAGE:
        digest = data["payload"]["image"]
        blob_path = assets / f"{digest}.bin"
        if not blob_path.exists():
            raise StorageError(f"missing image payload {digest}")
        payload: str | bytes = blob_path.read_bytes()
    else:
        payload = data["payload"]["text"]
    src = data["source"]
    return Clip(
        clip_id=data["clip_id"],
        kind=kind,
        payload=payload,
        source=ClipSource(
            doc_id=src["doc_id"],
            page=src.get("page"),
            rects=tuple(Rect(*r) for r in src["rects"]) if src.get("rects") else None,
            sentences=tuple(src["sentences"]) if src.get("sentences") else None,
            context_id=src.get("context_id"),
        ),
        created_at=data.get("created_at", 0),
    )


def _paper_from_dict(data: dict) -> PaperRef:
    return PaperRef(
        paper_id=data.get("paper_id"),
        title=data.get("title"),
        year=data.get("year"),
        tldr=data.get("tldr"),
        url=data.get("url"),
        source_context=data.get("source_context"),
        surface=data.get("surface"),
    )


def _thread_from_dict(data: dict, assets: Path) -> Thread:
    return Thread(
        thread_id=data["thread_id"],
        label=data["label"],
        last_additive_change=data.get("last_additive_change", 0),
        children=[_thread_from_dict(c, assets) for c in data.get("children", [])],
        clips=[_clip_from_dict(c, assets) for c in data.get("clips", [])],
        papers=[_paper_from_dict(p) for p in data.get("papers", [])],
    )


def load_workspace(path: Path | str) -> Workspace:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageError(f"cannot read workspace: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise StorageError(f"workspace file corrupt: {exc}") from exc
    if data.get("version") != WORKSPACE_FORMAT_VERSION:
        raise StorageError(f"unsupported workspace version {data.get('version')!r}")

    assets = _assets_dir(path)
    ws = Workspace(workspace_id=data["workspace_id"])
    ws.revision = data["revision"]
    ws.current_paper = data.get("current_paper")
    ws._counters.update(data.get("counters", {}))

    threads = [_thread_from_dict(t, assets) for t in data.get("threads", [])]
    if not threads or threads[0].thread_id != UNORGANIZED_ID:
        raise InvariantError("workspace file must list the unorganized thread first")
    ws.unorganized = threads[0]
    ws.threads = threads[1:]
    ws.validate()
    return ws


# ---------------------------------------------------------------------------
# Holding-tank persistence (survives CLI process boundaries)
# ---------------------------------------------------------------------------


def tank_to_dict(tank: HoldingTank) -> dict:
    image = None
    if tank.image_clip is not None:
        image = {
            "doc_id": tank.image_clip.doc_id,
            "page": tank.image_clip.page,
            "rect": [tank.image_clip.rect.x, tank.image_clip.rect.y, tank.image_clip.rect.w, tank.image_clip.rect.h],
            "image_hex": tank.image_clip.image_bytes.hex(),
        }
    return {
        "context": context_to_dict(tank.context) if tank.context else None,
        "selected": list(tank.selected),
        "image_clip": image,
    }


def tank_from_dict(data: dict) -> HoldingTank:
    image = None
    if data.get("image_clip"):
        raw = data["image_clip"]
        image = AreaCapture(
            doc_id=raw["doc_id"],
            page=raw["page"],
            rect=Rect(*raw["rect"]),
            image_bytes=bytes.fromhex(raw["image_hex"]),
        )
    return HoldingTank(
        context=context_from_dict(data["context"]) if data.get("context") else None,
        selected=tuple(data.get("selected", [])),
        image_clip=image,
    )
