"""Maps viewport highlights to sentences and resolves their citations.

The pipeline runs: viewport rectangles -> document space -> overlapping
sentences -> context expansion (neighboring sentences, clipped at section
boundaries) -> marker parsing -> bibliography resolution -> optional
external metadata lookup. Everything up to the metadata lookup is pure over
an immutable document.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, replace

from .docmodel import BibEntry, InlineCitationMarker, PageRect, ParsedDocument, Rect
from .errors import NetworkError, NotFound, PayloadTooLarge, RateLimited, UnknownPage
from .markers import MarkerStyle, normalize_name, parse_marker
from .metadata import MetadataClient, PaperRecord, record_from_dict, record_to_dict

DEFAULT_OVERLAP_THRESHOLD = 0.2
DEFAULT_CONTEXT_WINDOW = 1
DEFAULT_AREA_LIMIT = 2 * 1024 * 1024

NO_BIB_MATCH = "NO_BIB_MATCH"
LOOKUP_FAILED = "LOOKUP_FAILED"
AMBIGUOUS = "AMBIGUOUS"


class HighlightKind(enum.Enum):
    TEXT = "TEXT"
    AREA = "AREA"


@dataclass(frozen=True)
class ViewportTransform:
    """Affine link between rendered units and parse points, per page."""

    render_scale: float
    page_offsets: dict[int, tuple[float, float]]

    def __post_init__(self):
        if self.render_scale <= 0:
            raise ValueError("render_scale must be > 0")

    @staticmethod
    def identity(pages: int = 1) -> "ViewportTransform":
        return ViewportTransform(render_scale=1.0, page_offsets={p: (0.0, 0.0) for p in range(pages)})


@dataclass(frozen=True)
class Highlight:
    doc_id: str
    kind: HighlightKind
    rects: tuple[PageRect, ...]
    created_at: float = 0.0


@dataclass(frozen=True)
class AreaCapture:
    """Opaque image payload for an area highlight; no extraction attempted."""

    doc_id: str
    page: int
    rect: Rect
    image_bytes: bytes


@dataclass(frozen=True)
class ResolvedRef:
    marker: InlineCitationMarker
    entry: BibEntry | None
    paper: PaperRecord | None
    reason: str | None = None


@dataclass(frozen=True)
class CitationContext:
    context_id: str
    doc_id: str
    core_sentences: tuple[int, ...]
    context_sentences: tuple[int, ...]
    text: str
    found_markers: tuple[InlineCitationMarker, ...]
    resolved: tuple[ResolvedRef, ...]


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------


def to_document_space(highlight: Highlight, transform: ViewportTransform) -> list[PageRect]:
    """Rendered-unit rectangles -> parse points (subtract offset, divide scale)."""
    out = []
    for r in highlight.rects:
        if r.page not in transform.page_offsets:
            raise UnknownPage(f"no offset for page {r.page}")
        dx, dy = transform.page_offsets[r.page]
        s = transform.render_scale
        out.append(PageRect(page=r.page, x=(r.x - dx) / s, y=(r.y - dy) / s, w=r.w / s, h=r.h / s))
    return out


def to_viewport_space(rects: list[PageRect], transform: ViewportTransform) -> list[PageRect]:
    """Inverse of :func:`to_document_space`."""
    out = []
    for r in rects:
        if r.page not in transform.page_offsets:
            raise UnknownPage(f"no offset for page {r.page}")
        dx, dy = transform.page_offsets[r.page]
        s = transform.render_scale
        out.append(PageRect(page=r.page, x=r.x * s + dx, y=r.y * s + dy, w=r.w * s, h=r.h * s))
    return out


def locate_sentences(
    doc: ParsedDocument,
    rects_pts: list[PageRect],
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD,
) -> list[int]:
    """Sentences a highlight covers, in reading order.

    A sentence qualifies when any of its boxes overlaps any highlight rect
    by at least ``overlap_threshold`` of the smaller rectangle's area, so a
    grazing one-pixel touch never pulls in a neighboring line.
    """
    by_page: dict[int, list[Rect]] = {}
    for r in rects_pts:
        by_page.setdefault(r.page, []).append(r.rect())

    hits = []
    for sentence in doc.sentences:
        rects = by_page.get(sentence.page)
        if not rects:
            continue
        matched = False
        for box in sentence.boxes:
            for rect in rects:
                inter = box.intersection_area(rect)
                if inter <= 0.0:
                    continue
                smaller = min(box.area(), rect.area())
                if smaller > 0 and inter >= overlap_threshold * smaller:
                    matched = True
                    break
            if matched:
                break
        if matched:
            hits.append(sentence.index)
    return hits


# ---------------------------------------------------------------------------
# Context expansion
# ---------------------------------------------------------------------------


def context_id_for(doc_id: str, context_sentences: tuple[int, ...]) -> str:
    return f"{doc_id}:{context_sentences[0]}-{context_sentences[-1]}"


def expand_context(
    doc: ParsedDocument,
    core: list[int] | tuple[int, ...],
    window: int = DEFAULT_CONTEXT_WINDOW,
) -> CitationContext:
    """Add up to ``window`` neighbor sentences on each side of the core.

    Expansion stops at document ends and never crosses a section boundary,
    so a highlight at the top of a section does not drag in the previous
    section's closing sentence.
    """
    if not core:
        raise ValueError("core sentence set must be non-empty")
    core_sorted = tuple(sorted(set(core)))
    first, last = core_sorted[0], core_sorted[-1]
    first_section = doc.sentences[first].section_index
    last_section = doc.sentences[last].section_index

    extra: set[int] = set()
    idx = first
    for _ in range(window):
        idx -= 1
        if idx < 0 or doc.sentences[idx].section_index != first_section:
            break
        extra.add(idx)
    idx = last
    for _ in range(window):
        idx += 1
        if idx >= len(doc.sentences) or doc.sentences[idx].section_index != last_section:
            break
        extra.add(idx)

    context = tuple(sorted(set(core_sorted) | extra))
    text = " ".join(doc.sentences[i].text for i in context)
    return CitationContext(
        context_id=context_id_for(doc.doc_id, context),
        doc_id=doc.doc_id,
        core_sentences=core_sorted,
        context_sentences=context,
        text=text,
        found_markers=(),
        resolved=(),
    )


# ---------------------------------------------------------------------------
# Marker resolution
# ---------------------------------------------------------------------------


def _positional_bib(doc: ParsedDocument, label: int) -> BibEntry | None:
    # Numbered citation styles number the bibliography in order: label N is
    # the N-th entry (1-based), whatever the parser chose as entry keys.
    if 1 <= label <= len(doc.bib_entries):
        return doc.bib_entries[label - 1]
    return None


def _author_year_matches(doc: ParsedDocument, surname: str, year: int) -> list[BibEntry]:
    # Word-boundary match so "lee" never fires inside "fleet".
    pattern = re.compile(rf"\b{re.escape(surname)}\b")
    matches = []
    for entry in doc.bib_entries:
        if not pattern.search(normalize_name(entry.raw_text)):
            continue
        if entry.year == year or str(year) in entry.raw_text:
            matches.append(entry)
    return matches


def _expand_marker(doc: ParsedDocument, marker: InlineCitationMarker) -> list[tuple[InlineCitationMarker, BibEntry | None, str | None]]:
    """One (marker, bib, reason) triple per reference the surface denotes."""
    parse = parse_marker(marker.surface)
    bib_by_key = doc.bib_by_key()

    if parse.style is MarkerStyle.NUMERIC_BRACKET:
        label = parse.numeric_labels()[0]
        entry = bib_by_key.get(marker.bib_key) or _positional_bib(doc, label)
        if entry is None:
            return [(replace(marker, bib_key=str(label)), None, NO_BIB_MATCH)]
        return [(replace(marker, bib_key=entry.bib_key), entry, None)]

    if parse.style in (MarkerStyle.NUMERIC_RANGE, MarkerStyle.NUMERIC_LIST):
        out = []
        for label in parse.numeric_labels():
            entry = _positional_bib(doc, label)
            if entry is None:
                out.append((replace(marker, bib_key=str(label)), None, NO_BIB_MATCH))
            else:
                out.append((replace(marker, bib_key=entry.bib_key), entry, None))
        return out

    if parse.style is MarkerStyle.AUTHOR_YEAR:
        out = []
        for surname, year in parse.author_year_candidates():
            matches = _author_year_matches(doc, surname, year)
            if len(matches) == 1:
                out.append((replace(marker, bib_key=matches[0].bib_key), matches[0], None))
            elif len(matches) > 1:
                out.extend((replace(marker, bib_key=m.bib_key), m, AMBIGUOUS) for m in matches)
            else:
                linked = bib_by_key.get(marker.bib_key)
                if linked is not None:
                    out.append((marker, linked, None))
                else:
                    out.append((replace(marker, bib_key=f"{surname}:{year}"), None, NO_BIB_MATCH))
        return out

    linked = bib_by_key.get(marker.bib_key)
    if linked is not None:
        return [(marker, linked, None)]
    return [(marker, None, NO_BIB_MATCH)]


def resolve_context(
    doc: ParsedDocument,
    core: list[int] | tuple[int, ...],
    client: MetadataClient | None = None,
    window: int = DEFAULT_CONTEXT_WINDOW,
) -> CitationContext:
    """Expand the core to a full citation context with resolved references.

    Partial resolution is not an error: references without a bibliography
    match or whose metadata lookup failed stay in the result with a reason
    code and no external record. Results are deduplicated by bibliography
    key and ordered by marker position.
    """
    ctx = expand_context(doc, core, window=window)
    seen: set[str] = set()
    resolved: list[ResolvedRef] = []

    for marker in doc.markers_in(ctx.context_sentences):
        for synth, entry, reason in _expand_marker(doc, marker):
            dedup_key = entry.bib_key if entry is not None else f"?{synth.bib_key}"
            if dedup_key in seen:
                continue
            seen.add(dedup_key)
            paper = None
            if entry is not None and client is not None:
                try:
                    if entry.resolved_paper_id:
                        try:
                            paper = client.get_paper(entry.resolved_paper_id)
                        except NotFound:
                            paper = None
                    elif entry.title:
                        paper = client.lookup_title(entry.title)
                except (NetworkError, RateLimited):
                    reason = reason or LOOKUP_FAILED
            resolved.append(ResolvedRef(marker=synth, entry=entry, paper=paper, reason=reason))

    return replace(
        ctx,
        found_markers=tuple(r.marker for r in resolved),
        resolved=tuple(resolved),
    )


def capture_area(highlight: Highlight, image_bytes: bytes, limit: int = DEFAULT_AREA_LIMIT) -> AreaCapture:
    """Store-ready payload for an area highlight; bytes pass through opaquely."""
    if highlight.kind is not HighlightKind.AREA:
        raise ValueError("capture_area requires an AREA highlight")
    if len(image_bytes) > limit:
        raise PayloadTooLarge(f"image payload {len(image_bytes)} bytes exceeds limit {limit}")
    first = highlight.rects[0]
    return AreaCapture(doc_id=highlight.doc_id, page=first.page, rect=first.rect(), image_bytes=image_bytes)


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------


def _marker_to_dict(m: InlineCitationMarker) -> dict:
    return {"sentence": m.sentence_index, "start": m.start, "end": m.end, "surface": m.surface, "key": m.bib_key}


def _marker_from_dict(d: dict) -> InlineCitationMarker:
    return InlineCitationMarker(
        sentence_index=d["sentence"], start=d["start"], end=d["end"], surface=d["surface"], bib_key=d["key"]
    )


def _bib_to_dict(b: BibEntry) -> dict:
    return {"key": b.bib_key, "raw_text": b.raw_text, "title": b.title, "year": b.year, "paper_id": b.resolved_paper_id}


def _bib_from_dict(d: dict) -> BibEntry:
    return BibEntry(
        bib_key=d["key"], raw_text=d["raw_text"], title=d.get("title"), year=d.get("year"),
        resolved_paper_id=d.get("paper_id"),
    )


def context_to_dict(ctx: CitationContext) -> dict:
    return {
        "context_id": ctx.context_id,
        "doc_id": ctx.doc_id,
        "core": list(ctx.core_sentences),
        "context": list(ctx.context_sentences),
        "text": ctx.text,
        "found_markers": [_marker_to_dict(m) for m in ctx.found_markers],
        "resolved": [
            {
                "marker": _marker_to_dict(r.marker),
                "bib": _bib_to_dict(r.entry) if r.entry else None,
                "paper": record_to_dict(r.paper) if r.paper else None,
                "reason": r.reason,
            }
            for r in ctx.resolved
        ],
    }


def context_from_dict(data: dict) -> CitationContext:
    resolved = tuple(
        ResolvedRef(
            marker=_marker_from_dict(r["marker"]),
            entry=_bib_from_dict(r["bib"]) if r.get("bib") else None,
            paper=record_from_dict(r["paper"]) if r.get("paper") else None,
            reason=r.get("reason"),
        )
        for r in data.get("resolved", [])
    )
    return CitationContext(
        context_id=data["context_id"],
        doc_id=data["doc_id"],
        core_sentences=tuple(data["core"]),
        context_sentences=tuple(data["context"]),
        text=data["text"],
        found_markers=tuple(_marker_from_dict(m) for m in data.get("found_markers", [])),
        resolved=resolved,
    )
