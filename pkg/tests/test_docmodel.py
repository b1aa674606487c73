from __future__ import annotations

import json
import random

import pytest

from threadloom.docmodel import (
    InlineCitationMarker,
    Page,
    ParsedDocument,
    Rect,
    SectionHeader,
    SentenceSpan,
    ingest_document,
    ingest_tei,
    merge_fragmented_sentences,
    serialize_document,
    to_native,
)
from threadloom.errors import InvariantError, SchemaError

from conftest import fixture_path


# ---------------------------------------------------------------------------
# Independent oracle: walk the raw parse JSON without the document model.
# ---------------------------------------------------------------------------


def schema_walk_counts(raw: bytes) -> dict:
    data = json.loads(raw)
    return {
        "pages": len(data["pages"]),
        "sections": len(data["sections"]),
        "sentences": len(data["sentences"]),
        "bib": len(data["bib"]),
        "markers": len(data["markers"]),
    }


def minimal_parse(**overrides) -> dict:
    base = {
        "doc_id": "mini",
        "title": "Minimal",
        "parse_scale": 1.0,
        "pages": [{"index": 0, "width": 612.0, "height": 792.0}],
        "sections": [],
        "sentences": [{"index": 0, "page": 0, "text": "One sentence.", "boxes": [[72.0, 100.0, 450.0, 12.0]], "section": None}],
        "bib": [],
        "markers": [],
    }
    base.update(overrides)
    return base


def test_minimal_document_ingests():
    doc = ingest_document(json.dumps(minimal_parse()).encode())
    assert len(doc.sentences) == 1
    assert len(doc.markers) == 0
    assert doc.sentences[0].text == "One sentence."


def test_marker_past_sentence_list_is_invariant_error():
    parse = minimal_parse(
        markers=[{"sentence": 99, "start": 0, "end": 3, "surface": "One", "key": "b1"}]
    )
    with pytest.raises(InvariantError):
        ingest_document(json.dumps(parse).encode())


def test_schema_error_names_first_offending_field():
    parse = minimal_parse()
    del parse["sentences"]
    with pytest.raises(SchemaError) as excinfo:
        ingest_document(json.dumps(parse).encode())
    assert excinfo.value.field == "$.sentences"

    parse = minimal_parse()
    parse["sentences"][0]["boxes"] = [[72.0, 100.0, 450.0]]
    with pytest.raises(SchemaError) as excinfo:
        ingest_document(json.dumps(parse).encode())
    assert "boxes[0]" in excinfo.value.field


def test_not_json_is_schema_error():
    with pytest.raises(SchemaError):
        ingest_document(b"<not json>")


def test_doc_small_matches_schema_walk_oracle():
    raw = fixture_path("doc_small.json").read_bytes()
    expected = schema_walk_counts(raw)
    doc = ingest_document(raw)
    assert len(doc.pages) == expected["pages"]
    assert len(doc.sections) == expected["sections"]
    assert len(doc.sentences) == expected["sentences"]
    assert len(doc.bib_entries) == expected["bib"]
    assert len(doc.markers) == expected["markers"]


def test_roundtrip_serialize_reingest(doc_small):
    again = ingest_document(serialize_document(doc_small))
    assert again == doc_small


def test_ingest_idempotent_for_identical_input():
    raw = fixture_path("doc_small.json").read_bytes()
    assert ingest_document(raw) == ingest_document(raw)


def test_ingest_renumbers_gapped_indices():
    parse = minimal_parse(
        sentences=[
            {"index": 3, "page": 0, "text": "First here.", "boxes": [[72.0, 100.0, 450.0, 12.0]], "section": None},
            {"index": 7, "page": 0, "text": "Second [1] here.", "boxes": [[72.0, 114.0, 450.0, 12.0]], "section": None},
        ],
        bib=[{"key": "b1", "raw_text": "Ref one.", "title": None, "year": None, "paper_id": None}],
        markers=[{"sentence": 7, "start": 7, "end": 10, "surface": "[1]", "key": "b1"}],
    )
    doc = ingest_document(json.dumps(parse).encode())
    assert [s.index for s in doc.sentences] == [0, 1]
    assert doc.markers[0].sentence_index == 1


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda p: p["sentences"][0].update(text="   "), "empty text"),
        (lambda p: p["sentences"][0]["boxes"].__setitem__(0, [72.0, 100.0, 0.0, 12.0]), "degenerate box"),
        (lambda p: p.update(parse_scale=0.0), "parse_scale"),
        (lambda p: p["sentences"][0].update(page=5), "unknown page"),
        (
            lambda p: p.update(
                bib=[
                    {"key": "b1", "raw_text": "x", "title": None, "year": None, "paper_id": None},
                    {"key": "b1", "raw_text": "y", "title": None, "year": None, "paper_id": None},
                ]
            ),
            "duplicate bib key",
        ),
        (
            lambda p: p.update(bib=[{"key": "b1", "raw_text": "x", "title": None, "year": 1200, "paper_id": None}]),
            "implausible year",
        ),
    ],
)
def test_invariant_violations_rejected(mutate, message):
    parse = minimal_parse()
    mutate(parse)
    with pytest.raises(InvariantError):
        ingest_document(json.dumps(parse).encode())


def test_marker_surface_mismatch_rejected():
    parse = minimal_parse(
        markers=[{"sentence": 0, "start": 0, "end": 3, "surface": "Two", "key": "b1"}]
    )
    with pytest.raises(InvariantError):
        ingest_document(json.dumps(parse).encode())


# ---------------------------------------------------------------------------
# Sentence merging
# ---------------------------------------------------------------------------


def _doc(sentences, markers=(), bib=()):
    return ParsedDocument(
        doc_id="t",
        title="T",
        pages=(Page(index=0), Page(index=1)),
        sections=(SectionHeader(index=0, page=0, text="S", depth=1),),
        sentences=tuple(sentences),
        bib_entries=tuple(bib),
        markers=tuple(markers),
    )


def _sentence(i, text, page=0, y=None):
    return SentenceSpan(index=i, page=page, text=text, boxes=(Rect(72.0, y if y is not None else 100.0 + 14 * i, 450.0, 12.0),), section_index=0)


def test_merge_rule_fires_and_remaps_marker():
    from threadloom.docmodel import BibEntry

    doc = _doc(
        [_sentence(0, "The method uses"), _sentence(1, "gradient descent [4].")],
        markers=[InlineCitationMarker(sentence_index=1, start=17, end=20, surface="[4]", bib_key="b4")],
        bib=[BibEntry(bib_key="b4", raw_text="Fourth.")],
    )
    merged = merge_fragmented_sentences(doc)
    assert len(merged.sentences) == 1
    assert merged.sentences[0].text == "The method uses gradient descent [4]."
    marker = merged.markers[0]
    assert marker.sentence_index == 0
    assert merged.sentences[0].text[marker.start : marker.end] == "[4]"
    assert len(merged.sentences[0].boxes) == 2


def test_merge_rule_does_not_fire_after_terminal_punctuation():
    doc = _doc([_sentence(0, "This works."), _sentence(1, "However, it fails.")])
    merged = merge_fragmented_sentences(doc)
    assert [s.text for s in merged.sentences] == ["This works.", "However, it fails."]


def test_merge_never_crosses_pages():
    doc = _doc([_sentence(0, "Costs continue to", page=0), _sentence(1, "fall every year.", page=1, y=100.0)])
    merged = merge_fragmented_sentences(doc)
    assert len(merged.sentences) == 2


def test_fragmented_fixture_has_exactly_planted_merges():
    raw = fixture_path("fragmented.json").read_bytes()
    answers = json.loads(fixture_path("fragmented_answers.json").read_text())
    doc = ingest_document(raw)
    merged = merge_fragmented_sentences(doc)
    assert len(doc.sentences) - len(merged.sentences) == answers["planted_merges"]
    assert [s.text for s in merged.sentences] == answers["sentences"]


def test_merge_is_idempotent_on_fixture():
    doc = ingest_document(fixture_path("fragmented.json").read_bytes())
    once = merge_fragmented_sentences(doc)
    twice = merge_fragmented_sentences(once)
    assert once == twice


def test_merge_preserves_marker_surfaces_and_bib_multiset():
    doc = ingest_document(fixture_path("fragmented.json").read_bytes())
    merged = merge_fragmented_sentences(doc)
    assert sum(len(m.surface) for m in merged.markers) == sum(len(m.surface) for m in doc.markers)
    assert sorted(m.bib_key for m in merged.markers) == sorted(m.bib_key for m in doc.markers)


def _random_fragment_doc(rng: random.Random) -> ParsedDocument:
    words = ["alpha", "beta", "gamma", "delta", "parsing", "threads", "corpus", "When", "Systems"]
    sentences = []
    idx = 0
    for page in (0, 1):
        for row in range(rng.randint(2, 8)):
            n = rng.randint(1, 5)
            text = " ".join(rng.choice(words) for _ in range(n))
            if rng.random() < 0.5:
                text = text[0].upper() + text[1:] + "."
            sentences.append(
                SentenceSpan(index=idx, page=page, text=text, boxes=(Rect(72.0, 100.0 + 14 * row, 450.0, 12.0),), section_index=0)
            )
            idx += 1
    return ParsedDocument(
        doc_id="rand",
        title="Rand",
        pages=(Page(index=0), Page(index=1)),
        sections=(SectionHeader(index=0, page=0, text="S", depth=1),),
        sentences=tuple(sentences),
        bib_entries=(),
        markers=(),
    )


def test_merge_idempotent_on_random_documents():
    rng = random.Random(20240817)
    for _ in range(50):
        doc = _random_fragment_doc(rng)
        once = merge_fragmented_sentences(doc)
        assert merge_fragmented_sentences(once) == once


# ---------------------------------------------------------------------------
# TEI import
# ---------------------------------------------------------------------------


def test_tei_import():
    doc = ingest_tei(fixture_path("tei_sample.xml").read_bytes(), doc_id="tei-doc")
    assert doc.doc_id == "tei-doc"
    assert doc.title == "Sample TEI Parse"
    assert len(doc.pages) == 2
    assert len(doc.sections) == 2
    assert [s.text for s in doc.sentences] == [
        "Reading tools keep growing in scope.",
        "Earlier systems focused on annotation [1].",
        "Interfaces evolved alongside parsing quality [2] in recent years.",
    ]
    assert len(doc.sentences[2].boxes) == 2
    assert [m.bib_key for m in doc.markers] == ["b0", "b1"]
    assert [b.year for b in doc.bib_entries] == [2015, 2018]
    assert doc.bib_entries[0].title == "Annotation Systems"
    # Round-trips through the native schema like any other document.
    assert ingest_document(serialize_document(doc)) == doc


def test_to_native_field_names(doc_small):
    native = to_native(doc_small)
    assert set(native) == {"doc_id", "title", "parse_scale", "pages", "sections", "sentences", "bib", "markers"}
    assert all(len(b) == 4 for s in native["sentences"] for b in s["boxes"])
