"""Canonical structured-document model.

A :class:`ParsedDocument` is the engine's view of one paper: sentences with
page-space bounding boxes, section headers, the bibliography, and inline
citation markers tied to sentence character ranges. Documents arrive as a
native JSON parse (one document per file) or as TEI-style XML with
coordinate attributes, which the importer converts to the native schema.

Coordinates are normalized at ingestion: points, origin at the top-left of
each page. ``parse_scale`` records the points-per-unit of the coordinate
system the parse was produced at; viewport mapping happens elsewhere.

Documents are immutable after construction and safe to share across
concurrent readers.
"""

from __future__ import annotations

import datetime
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from typing import Any

from .errors import InvariantError, SchemaError

NATIVE_FIELDS = ("doc_id", "title", "parse_scale", "pages", "sections", "sentences", "bib", "markers")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in page coordinates (points, top-left origin)."""

    x: float
    y: float
    w: float
    h: float

    def area(self) -> float:
        return self.w * self.h

    def intersection_area(self, other: "Rect") -> float:
        ix = max(0.0, min(self.x + self.w, other.x + other.w) - max(self.x, other.x))
        iy = max(0.0, min(self.y + self.h, other.y + other.h) - max(self.y, other.y))
        return ix * iy


@dataclass(frozen=True)
class PageRect:
    """A rectangle tagged with the page it lives on."""

    page: int
    x: float
    y: float
    w: float
    h: float

    def rect(self) -> Rect:
        return Rect(self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class Page:
    index: int
    width: float | None = None
    height: float | None = None


@dataclass(frozen=True)
class SectionHeader:
    index: int
    page: int
    text: str
    depth: int = 1


@dataclass(frozen=True)
class SentenceSpan:
    index: int
    page: int
    text: str
    boxes: tuple[Rect, ...]
    section_index: int | None = None


@dataclass(frozen=True)
class BibEntry:
    bib_key: str
    raw_text: str
    title: str | None = None
    year: int | None = None
    resolved_paper_id: str | None = None


@dataclass(frozen=True)
class InlineCitationMarker:
    sentence_index: int
    start: int
    end: int
    surface: str
    bib_key: str


@dataclass(frozen=True)
class ParsedDocument:
    doc_id: str
    title: str
    pages: tuple[Page, ...]
    sections: tuple[SectionHeader, ...]
    sentences: tuple[SentenceSpan, ...]
    bib_entries: tuple[BibEntry, ...]
    markers: tuple[InlineCitationMarker, ...]
    parse_scale: float = 1.0

    def sentence(self, index: int) -> SentenceSpan:
        return self.sentences[index]

    def bib_by_key(self) -> dict[str, BibEntry]:
        return {b.bib_key: b for b in self.bib_entries}

    def markers_in(self, sentence_indices) -> list[InlineCitationMarker]:
        """Markers lying in the given sentences, ordered by position."""
        wanted = set(sentence_indices)
        found = [m for m in self.markers if m.sentence_index in wanted]
        found.sort(key=lambda m: (m.sentence_index, m.start))
        return found


# ---------------------------------------------------------------------------
# Schema walking (SchemaError names the first offending field)
# ---------------------------------------------------------------------------


def _require(obj: dict, field_name: str, types, path: str):
    if field_name not in obj:
        raise SchemaError(f"{path}.{field_name}", f"missing required field {path}.{field_name}")
    value = obj[field_name]
    # bool is an int subclass; never accept it where a number is expected
    allowed = types if isinstance(types, tuple) else (types,)
    if not isinstance(value, types) or (isinstance(value, bool) and bool not in allowed):
        raise SchemaError(f"{path}.{field_name}", f"field {path}.{field_name} has wrong type {type(value).__name__}")
    return value

def _optional(obj: dict, field_name: str, types, path: str):
    if field_name not in obj or obj[field_name] is None:
        return None
    return _require(obj, field_name, types, path)


def _parse_rect(raw: Any, path: str) -> Rect:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise SchemaError(path, f"{path} must be a [x, y, w, h] quadruple")
    vals = []
    for i, v in enumerate(raw):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise SchemaError(f"{path}[{i}]", f"{path}[{i}] must be a number")
        vals.append(float(v))
    return Rect(*vals)


def parse_native(raw: bytes | str | dict) -> ParsedDocument:
    """Decode the native parse schema into an (unvalidated) document.

    Raises :class:`SchemaError` naming the first offending field when the
    input is malformed. Invariants are checked separately by
    :func:`validate_document`.
    """
    if isinstance(raw, (bytes, str)):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"not valid JSON: {exc}") from exc
    else:
        data = raw
    if not isinstance(data, dict):
        raise SchemaError("$", "top level must be an object")

    doc_id = _require(data, "doc_id", str, "$")
    title = _require(data, "title", str, "$")
    parse_scale = _require(data, "parse_scale", (int, float), "$")

    pages_raw = _require(data, "pages", list, "$")
    pages = []
    for i, p in enumerate(pages_raw):
        path = f"$.pages[{i}]"
        if not isinstance(p, dict):
            raise SchemaError(path, f"{path} must be an object")
        pages.append(
            Page(
                index=_require(p, "index", int, path),
                width=_optional(p, "width", (int, float), path),
                height=_optional(p, "height", (int, float), path),
            )
        )

    sections_raw = _require(data, "sections", list, "$")
    sections = []
    for i, s in enumerate(sections_raw):
        path = f"$.sections[{i}]"
        if not isinstance(s, dict):
            raise SchemaError(path, f"{path} must be an object")
        sections.append(
            SectionHeader(
                index=_require(s, "index", int, path),
                page=_require(s, "page", int, path),
                text=_require(s, "text", str, path),
                depth=s.get("depth", 1) if isinstance(s.get("depth", 1), int) else 1,
            )
        )

    sentences_raw = _require(data, "sentences", list, "$")
    sentences = []
    for i, s in enumerate(sentences_raw):
        path = f"$.sentences[{i}]"
        if not isinstance(s, dict):
            raise SchemaError(path, f"{path} must be an object")
        boxes_raw = _require(s, "boxes", list, path)
        boxes = tuple(_parse_rect(b, f"{path}.boxes[{j}]") for j, b in enumerate(boxes_raw))
        sentences.append(
            SentenceSpan(
                index=_require(s, "index", int, path),
                page=_require(s, "page", int, path),
                text=_require(s, "text", str, path),
                boxes=boxes,
                section_index=_optional(s, "section", int, path),
            )
        )

    bib_raw = _require(data, "bib", list, "$")
    bib = []
    for i, b in enumerate(bib_raw):
        path = f"$.bib[{i}]"
        if not isinstance(b, dict):
            raise SchemaError(path, f"{path} must be an object")
        bib.append(
            BibEntry(
                bib_key=_require(b, "key", str, path),
                raw_text=_require(b, "raw_text", str, path),
                title=_optional(b, "title", str, path),
                year=_optional(b, "year", int, path),
                resolved_paper_id=_optional(b, "paper_id", str, path),
            )
        )

    markers_raw = _require(data, "markers", list, "$")
    markers = []
    for i, m in enumerate(markers_raw):
        path = f"$.markers[{i}]"
        if not isinstance(m, dict):
            raise SchemaError(path, f"{path} must be an object")
        markers.append(
            InlineCitationMarker(
                sentence_index=_require(m, "sentence", int, path),
                start=_require(m, "start", int, path),
                end=_require(m, "end", int, path),
                surface=_require(m, "surface", str, path),
                bib_key=_require(m, "key", str, path),
            )
        )

    return ParsedDocument(
        doc_id=doc_id,
        title=title,
        pages=tuple(pages),
        sections=tuple(sections),
        sentences=tuple(sentences),
        bib_entries=tuple(bib),
        markers=tuple(markers),
        parse_scale=float(parse_scale),
    )


def validate_document(doc: ParsedDocument) -> None:
    """Check all document invariants, raising :class:`InvariantError`."""
    if doc.parse_scale <= 0:
        raise InvariantError(f"parse_scale must be > 0, got {doc.parse_scale}")
    page_indices = {p.index for p in doc.pages}
    if len(page_indices) != len(doc.pages):
        raise InvariantError("duplicate page index")

    seen_sections = set()
    for s in doc.sections:
        if s.index in seen_sections:
            raise InvariantError(f"duplicate section index {s.index}")
        seen_sections.add(s.index)
        if s.depth < 1:
            raise InvariantError(f"section {s.index} depth must be >= 1")

    prev_index = None
    prev_page = None
    for s in doc.sentences:
        if s.page not in page_indices:
            raise InvariantError(f"sentence {s.index} on unknown page {s.page}")
        if prev_index is not None and s.index <= prev_index:
            raise InvariantError(f"sentence indices not strictly increasing at {s.index}")
        if prev_page is not None and s.page < prev_page:
            raise InvariantError(f"sentence {s.index} breaks page ordering")
        prev_index, prev_page = s.index, s.page
        if not s.boxes:
            raise InvariantError(f"sentence {s.index} has no boxes")
        for b in s.boxes:
            if b.w <= 0 or b.h <= 0:
                raise InvariantError(f"sentence {s.index} has degenerate box {b}")
        if not s.text.strip():
            raise InvariantError(f"sentence {s.index} text empty after trimming")
        if s.section_index is not None and s.section_index not in seen_sections:
            raise InvariantError(f"sentence {s.index} references unknown section {s.section_index}")

    seen_keys = set()
    current_year = datetime.date.today().year
    for b in doc.bib_entries:
        if b.bib_key in seen_keys:
            raise InvariantError(f"duplicate bib key {b.bib_key!r}")
        seen_keys.add(b.bib_key)
        if b.year is not None and not (1500 <= b.year <= current_year + 1):
            raise InvariantError(f"bib {b.bib_key!r} has implausible year {b.year}")

    sentence_indices = {s.index for s in doc.sentences}
    by_index = {s.index: s for s in doc.sentences}
    for m in doc.markers:
        if m.sentence_index not in sentence_indices:
            raise InvariantError(f"marker {m.surface!r} points at missing sentence {m.sentence_index}")
        text = by_index[m.sentence_index].text
        if not (0 <= m.start < m.end <= len(text)):
            raise InvariantError(f"marker {m.surface!r} range ({m.start}, {m.end}) outside sentence {m.sentence_index}")
        if text[m.start : m.end] != m.surface:
            raise InvariantError(
                f"marker surface {m.surface!r} does not match sentence text {text[m.start:m.end]!r}"
            )


def _canonicalize(doc: ParsedDocument) -> ParsedDocument:
    # Renumber sentences and sections to list positions so indices double as
    # positions everywhere downstream; markers are remapped by original index.
    section_map = {s.index: pos for pos, s in enumerate(doc.sections)}
    sentence_map = {s.index: pos for pos, s in enumerate(doc.sentences)}
    sections = tuple(replace(s, index=section_map[s.index]) for s in doc.sections)
    sentences = tuple(
        replace(
            s,
            index=sentence_map[s.index],
            section_index=section_map[s.section_index] if s.section_index is not None else None,
        )
        for s in doc.sentences
    )
    markers = tuple(replace(m, sentence_index=sentence_map[m.sentence_index]) for m in doc.markers)
    return replace(doc, sections=sections, sentences=sentences, markers=markers)


def ingest_document(raw: bytes | str | dict) -> ParsedDocument:
    """Parse, validate, and canonicalize one native-schema document.

    Deterministic: identical input yields a structurally equal document.
    """
    doc = parse_native(raw)
    validate_document(doc)
    doc = _canonicalize(doc)
    validate_document(doc)
    return doc


def to_native(doc: ParsedDocument) -> dict:
    """Serialize back to the native schema (inverse of ingestion)."""
    return {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "parse_scale": doc.parse_scale,
        "pages": [
            {"index": p.index, "width": p.width, "height": p.height} for p in doc.pages
        ],
        "sections": [
            {"index": s.index, "page": s.page, "text": s.text, "depth": s.depth} for s in doc.sections
        ],
        "sentences": [
            {
                "index": s.index,
                "page": s.page,
                "text": s.text,
                "boxes": [[b.x, b.y, b.w, b.h] for b in s.boxes],
                "section": s.section_index,
            }
            for s in doc.sentences
        ],
        "bib": [
            {
                "key": b.bib_key,
                "raw_text": b.raw_text,
                "title": b.title,
                "year": b.year,
                "paper_id": b.resolved_paper_id,
            }
            for b in doc.bib_entries
        ],
        "markers": [
            {
                "sentence": m.sentence_index,
                "start": m.start,
                "end": m.end,
                "surface": m.surface,
                "key": m.bib_key,
            }
            for m in doc.markers
        ],
    }


def serialize_document(doc: ParsedDocument) -> bytes:
    return (json.dumps(to_native(doc), sort_keys=True, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Sentence-merge repair
# ---------------------------------------------------------------------------

# Terminal punctuation, optionally followed by closing brackets/quotes.
_TERMINAL_RE = re.compile(r"[.!?][)\]}’”'\"]*\s*$")
_CITE_START_RE = re.compile(r"^[\[(]\s*\d")


def _ends_terminal(text: str) -> bool:
    return bool(_TERMINAL_RE.search(text))


def _starts_like_fragment(sentence: SentenceSpan) -> bool:
    text = sentence.text
    if not text:
        return False
    if text[0].islower():
        return True
    return bool(_CITE_START_RE.match(text))


def _should_merge(earlier: SentenceSpan, later: SentenceSpan, later_has_marker_at_zero: bool) -> bool:
    if earlier.page != later.page:
        return False
    if _ends_terminal(earlier.text):
        return False
    return _starts_like_fragment(later) or later_has_marker_at_zero


def merge_fragmented_sentences(doc: ParsedDocument) -> ParsedDocument:
    """Repair sentences the upstream parse broke mid-sentence.

    Adjacent same-page sentences merge when the earlier one lacks terminal
    punctuation and the later one starts with a lowercase letter or a
    citation-marker surface. Boxes are unioned, markers remapped, and all
    sentence indices renumbered. Idempotent: a second application is the
    identity.
    """
    markers_by_sentence: dict[int, list[InlineCitationMarker]] = {}
    for m in doc.markers:
        markers_by_sentence.setdefault(m.sentence_index, []).append(m)

    merged_sentences: list[SentenceSpan] = []
    merged_markers: list[list[InlineCitationMarker]] = []

    for s in doc.sentences:
        own_markers = list(markers_by_sentence.get(s.index, []))
        if merged_sentences:
            prev = merged_sentences[-1]
            has_marker_at_zero = any(m.start == 0 for m in own_markers)
            if _should_merge(prev, s, has_marker_at_zero):
                offset = len(prev.text) + 1
                combined = replace(
                    prev,
                    text=prev.text + " " + s.text,
                    boxes=prev.boxes + s.boxes,
                )
                merged_sentences[-1] = combined
                merged_markers[-1].extend(
                    replace(m, start=m.start + offset, end=m.end + offset) for m in own_markers
                )
                continue
        merged_sentences.append(s)
        merged_markers.append(own_markers)

    out_sentences = []
    out_markers = []
    for pos, (s, marks) in enumerate(zip(merged_sentences, merged_markers)):
        out_sentences.append(replace(s, index=pos))
        out_markers.extend(replace(m, sentence_index=pos) for m in marks)
    out_markers.sort(key=lambda m: (m.sentence_index, m.start))

    merged = replace(doc, sentences=tuple(out_sentences), markers=tuple(out_markers))
    validate_document(merged)
    return merged


# ---------------------------------------------------------------------------
# TEI-style XML import
# ---------------------------------------------------------------------------

_TEI_NS = "{http://www.tei-c.org/ns/1.0}"


def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _coords_to_boxes(coords: str) -> list[tuple[int, list[float]]]:
    """Parse a TEI ``coords`` attribute: ``page,x,y,w,h;page,x,y,w,h;...``."""
    out = []
    for chunk in coords.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 5:
            raise SchemaError("coords", f"bad coords chunk {chunk!r}")
        page = int(float(parts[0]))
        out.append((page, [float(v) for v in parts[1:]]))
    return out


def _element_text_with_refs(elem) -> tuple[str, list[dict]]:
    """Flatten an element to text, recording bibr ``<ref>`` spans."""
    text = elem.text or ""
    refs = []
    for child in elem:
        tag = _strip_ns(child.tag)
        child_text = "".join(child.itertext())
        if tag == "ref" and child.get("type") == "bibr":
            target = (child.get("target") or "").lstrip("#")
            refs.append({"start": len(text), "end": len(text) + len(child_text), "surface": child_text, "key": target})
        text += child_text
        text += child.tail or ""
    return text, refs


def tei_to_native(xml_bytes: bytes | str, doc_id: str | None = None) -> dict:
    """Convert TEI-style XML (with ``coords`` attributes) to the native schema.

    Understands the usual shape: ``facsimile/surface`` page sizes, ``body``
    divs with ``head``/``s`` elements, bibr ``ref`` markers, and a
    ``listBibl`` of ``biblStruct`` entries.
    """
    if isinstance(xml_bytes, str):
        xml_bytes = xml_bytes.encode("utf-8")
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise SchemaError("$", f"not valid XML: {exc}") from exc

    title_el = root.find(f".//{_TEI_NS}titleStmt/{_TEI_NS}title")
    title = "".join(title_el.itertext()).strip() if title_el is not None else ""

    pages: dict[int, dict] = {}
    for surface in root.iter(f"{_TEI_NS}surface"):
        n = int(surface.get("n", "1")) - 1
        lrx = surface.get("lrx")
        lry = surface.get("lry")
        pages[n] = {
            "index": n,
            "width": float(lrx) if lrx else None,
            "height": float(lry) if lry else None,
        }

    sections: list[dict] = []
    sentences: list[dict] = []
    markers: list[dict] = []

    body = root.find(f".//{_TEI_NS}body")
    if body is None:
        raise SchemaError("$.body", "TEI document has no body")

    current_section: int | None = None
    for div in body.iter(f"{_TEI_NS}div"):
        for elem in div:
            tag = _strip_ns(elem.tag)
            if tag == "head":
                coords = elem.get("coords")
                page = _coords_to_boxes(coords)[0][0] - 1 if coords else 0
                current_section = len(sections)
                sections.append(
                    {
                        "index": current_section,
                        "page": page,
                        "text": "".join(elem.itertext()).strip(),
                        "depth": int(elem.get("n", "1").count(".") + 1) if elem.get("n") else 1,
                    }
                )
            elif tag == "p":
                for s_el in elem.iter(f"{_TEI_NS}s"):
                    coords = s_el.get("coords")
                    if not coords:
                        continue
                    chunks = _coords_to_boxes(coords)
                    page = chunks[0][0] - 1
                    raw_text, refs = _element_text_with_refs(s_el)
                    lead = len(raw_text) - len(raw_text.lstrip())
                    text = raw_text.strip()
                    if not text:
                        continue
                    idx = len(sentences)
                    sentences.append(
                        {
                            "index": idx,
                            "page": page,
                            "text": text,
                            "boxes": [box for _, box in chunks],
                            "section": current_section,
                        }
                    )
                    for ref in refs:
                        surface = ref["surface"]
                        start = ref["start"] - lead
                        if not (0 <= start and text[start : start + len(surface)] == surface):
                            start = text.find(surface)
                        if start < 0:
                            continue
                        markers.append(
                            {
                                "sentence": idx,
                                "start": start,
                                "end": start + len(surface),
                                "surface": surface,
                                "key": ref["key"],
                            }
                        )
                    pages.setdefault(page, {"index": page, "width": None, "height": None})

    bib: list[dict] = []
    for bibl in root.iter(f"{_TEI_NS}biblStruct"):
        xml_id = bibl.get("{http://www.w3.org/XML/1998/namespace}id")
        if not xml_id:
            continue
        t_el = bibl.find(f".//{_TEI_NS}title")
        b_title = "".join(t_el.itertext()).strip() if t_el is not None else None
        year = None
        date_el = bibl.find(f".//{_TEI_NS}date")
        if date_el is not None and date_el.get("when"):
            try:
                year = int(date_el.get("when")[:4])
            except ValueError:
                year = None
        raw = " ".join("".join(bibl.itertext()).split())
        bib.append({"key": xml_id, "raw_text": raw, "title": b_title, "year": year, "paper_id": None})

    known_keys = {b["key"] for b in bib}
    markers = [m for m in markers if m["key"] in known_keys or not known_keys]

    if not pages:
        pages[0] = {"index": 0, "width": None, "height": None}

    return {
        "doc_id": doc_id or (title.lower().replace(" ", "-")[:40] or "tei-document"),
        "title": title,
        "parse_scale": 1.0,
        "pages": [pages[k] for k in sorted(pages)],
        "sections": sections,
        "sentences": sentences,
        "bib": bib,
        "markers": markers,
    }


def ingest_tei(xml_bytes: bytes | str, doc_id: str | None = None) -> ParsedDocument:
    """Import a TEI-style XML parse and validate it as a native document."""
    return ingest_document(tei_to_native(xml_bytes, doc_id=doc_id))
