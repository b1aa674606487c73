"""Acceptance suite: one test per acceptance criterion, each printing a
PASS/FAIL line and enforcing its stated tolerance and time budget.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

from __future__ import annotations

import contextlib
import json
import random
import socket
import time

import pytest

from threadloom.discovery import PER_REFERENCE_FETCH_CAP, SAMPLE_SIZE, collect_citing, rank_recommendations
from threadloom.docmodel import PageRect
from threadloom.embeddings import HashedBagOfWordsProvider
from threadloom.errors import FixtureMiss
from threadloom.highlights import Highlight, HighlightKind, ViewportTransform, locate_sentences, resolve_context, to_document_space, to_viewport_space
from threadloom.markers import parse_marker
from threadloom.store import Workspace, load_workspace, save_workspace, workspace_to_dict
from threadloom.suggest import ThreadSuggester

from conftest import fixture_path, load_fixture_doc
from test_discovery import GraphClient, _thread_with_refs, oracle_recommendations, synthetic_graph
from test_highlights import _layout_doc, brute_force_locate
from test_service import run_scripted_session
from test_store import make_context, random_ops_fuzz
from test_suggest import ScaledProvider, _two_member_chain_vectors, VectorProvider, oracle_rank, random_workspace, WORDS


@contextlib.contextmanager
def criterion(name: str, budget_seconds: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"FAIL {name}")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_seconds, f"{name} took {elapsed:.2f}s, budget {budget_seconds:g}s"
    print(f"PASS {name} ({elapsed:.2f}s < {budget_seconds:g}s)")


def test_citation_grammar_corpus():
    with criterion("citation-grammar-corpus", 1.0):
        corpus = json.loads(fixture_path("marker_corpus.json").read_text(encoding="utf-8"))
        cases = corpus["cases"]
        assert len(cases) >= 60
        styles = {c["style"] for c in cases}
        assert {"NUMERIC_BRACKET", "NUMERIC_RANGE", "NUMERIC_LIST", "AUTHOR_YEAR"} <= styles
        assert any(c["surface"] == "[12 -- 15]" for c in cases)
        disagreements = []
        for case in cases:
            parse = parse_marker(case["surface"])
            if parse.style.value != case["style"] or list(parse.expanded_keys) != case["keys"]:
                disagreements.append(case["surface"])
        assert disagreements == [], f"grammar disagrees on {disagreements}"


def test_highlight_geometry():
    with criterion("highlight-geometry", 10.0):
        rng = random.Random(90210)
        for _ in range(1000):
            doc = _layout_doc(rng, pages=2, per_page=8)
            rects = [
                PageRect(
                    page=rng.randint(0, 1),
                    x=rng.uniform(0, 500),
                    y=rng.uniform(0, 700),
                    w=rng.uniform(5, 250),
                    h=rng.uniform(5, 80),
                )
                for _ in range(rng.randint(1, 3))
            ]
            assert locate_sentences(doc, rects) == brute_force_locate(doc, rects)

        for _ in range(1000):
            scale = rng.uniform(0.05, 20.0)
            transform = ViewportTransform(
                render_scale=scale,
                page_offsets={0: (rng.uniform(-1000, 1000), rng.uniform(-1000, 1000))},
            )
            rect = PageRect(
                page=0, x=rng.uniform(-500, 500), y=rng.uniform(-500, 500), w=rng.uniform(0.01, 400), h=rng.uniform(0.01, 400)
            )
            h = Highlight(doc_id="d", kind=HighlightKind.TEXT, rects=(rect,))
            (back,) = to_viewport_space(to_document_space(h, transform), transform)
            for got, want in ((back.x, rect.x), (back.y, rect.y), (back.w, rect.w), (back.h, rect.h)):
                assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


def test_chain_ranking_oracle_equivalence():
    with criterion("chain-ranking-oracle-equivalence", 5.0):
        rng = random.Random(424242)
        provider = HashedBagOfWordsProvider(dim=64, seed="acceptance")
        for _ in range(200):
            ws = random_workspace(rng, max_nodes=25)
            text = " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 5)))
            expected = oracle_rank(ws, text, provider)
            got = ThreadSuggester(provider).rank_chains(ws, text)
            assert [s.chain.leaf_id for s in got] == [r["leaf"] for r in expected]
            assert [s.objective for s in got] == [r["objective"] for r in expected]
            assert [[m.thread_id for m in s.member_ranking] for s in got] == [
                [tid for tid, _ in r["members"]] for r in expected
            ]

        # Worked example: (0.9 x 0.2 = 0.18) loses to (0.6 x 0.5 = 0.30).
        x1, x2 = _two_member_chain_vectors(member_cos=0.2, group_cos=0.9)
        y1, y2 = _two_member_chain_vectors(member_cos=0.5, group_cos=0.6)
        table = VectorProvider(
            {"x root": x1, "x leaf": x2, "y root": y1, "y leaf": y2, "target": (1.0, 0.0, 0.0)}, dim=3
        )
        ws = Workspace()
        xr = ws.create_thread("x root")
        ws.create_thread("x leaf", parent_id=xr.thread_id)
        yr = ws.create_thread("y root")
        y_leaf = ws.create_thread("y leaf", parent_id=yr.thread_id)
        ranked = ThreadSuggester(table).rank_chains(ws, "target")
        assert ranked[0].chain.leaf_id == y_leaf.thread_id
        assert ranked[0].objective == pytest.approx(0.30, abs=1e-9)
        assert ranked[1].objective == pytest.approx(0.18, abs=1e-9)


def test_scale_invariance():
    with criterion("scale-invariance", 30.0):
        rng = random.Random(5150)
        base = HashedBagOfWordsProvider(dim=64, seed="scale-acceptance")
        for _ in range(100):
            ws = random_workspace(rng, max_nodes=15)
            text = " ".join(rng.choice(WORDS) for _ in range(3))
            reference = ThreadSuggester(base).rank_chains(ws, text)
            ref_chains = [s.chain.leaf_id for s in reference]
            ref_members = [[m.thread_id for m in s.member_ranking] for s in reference]
            scale = rng.choice([1e-3, 0.5, 2.0, 97.0, 1e4])
            scaled = ThreadSuggester(ScaledProvider(base, scale)).rank_chains(ws, text)
            assert [s.chain.leaf_id for s in scaled] == ref_chains
            assert [[m.thread_id for m in s.member_ranking] for s in scaled] == ref_members


def test_recommender_constants_and_oracle():
    with criterion("recommender-constants-and-oracle", 5.0):
        assert PER_REFERENCE_FETCH_CAP == 1000
        assert SAMPLE_SIZE == 50

        rng = random.Random(60609)
        records, refs, citing = synthetic_graph(rng, nodes=200)
        client = GraphClient(records, citing)
        ws = Workspace()
        thread = _thread_with_refs(ws, "t", refs)
        pool = collect_citing(thread, client)

        citation_calls = [c for c in client.calls if c[0] == "citations"]
        assert len(citation_calls) == len(refs)
        assert all(call[2] <= 1000 for call in citation_calls)

        ranked = rank_recommendations(pool, thread, client)
        assert len(ranked) <= 50
        expected_order, expected_counts = oracle_recommendations(records, refs, citing, set(refs))
        assert {pid: s.count for pid, s in pool.scores().items()} == expected_counts
        assert [r.paper.paper_id for r in ranked] == expected_order

        # The sample is year-descending with cosine tie-break inside a year.
        years = [r.paper.year if r.paper.year is not None else -1 for r in ranked]
        assert years == sorted(years, reverse=True)
        for a, b in zip(ranked, ranked[1:]):
            if a.paper.year == b.paper.year and a.cosine_to_centroid is not None and b.cosine_to_centroid is not None:
                assert a.cosine_to_centroid >= b.cosine_to_centroid


def test_thread_store_fuzz(tmp_path):
    with criterion("thread-store-fuzz", 60.0):
        ws = Workspace("acceptance-fuzz")
        random_ops_fuzz(ws, random.Random(987654321), ops=10_000, persist_every=100, tmp_path=tmp_path)
        ws.validate()
        path = tmp_path / "final.json"
        save_workspace(ws, path)
        assert workspace_to_dict(load_workspace(path)) == workspace_to_dict(ws)


def test_determinism_replay(engine_factory):
    with criterion("determinism-replay", 60.0):
        # The session guard rejects any non-loopback dial; prove it is armed.
        with pytest.raises((RuntimeError, OSError)):
            socket.create_connection(("203.0.113.1", 80), timeout=0.25)

        first = engine_factory("acceptance-replay-one")
        second = engine_factory("acceptance-replay-two")
        run_scripted_session(first)
        run_scripted_session(second)
        assert (first.home / "workspace.json").read_bytes() == (second.home / "workspace.json").read_bytes()
        assert (first.home / "tank.json").read_bytes() == (second.home / "tank.json").read_bytes()
        assert (first.home / "workspace.json").read_bytes() == fixture_path("golden_workspace.json").read_bytes()


def test_fixture_mode_completeness(engine_factory):
    with criterion("fixture-mode-completeness", 10.0):
        engine = engine_factory("acceptance-fixture-mode")
        assert engine.client.config.fixture_mode

        # A fixture miss is a hard error, never a silent degrade...
        with pytest.raises(FixtureMiss):
            engine.client.lookup_title("Never Seeded Title ZZZ")

        # ...including through the resolution pipeline.
        doc = load_fixture_doc("doc_small.json")
        parse = json.loads(fixture_path("doc_small.json").read_text(encoding="utf-8"))
        parse["bib"][1]["title"] = "Never Seeded Title ZZZ"
        from threadloom.docmodel import ingest_document

        doctored = ingest_document(json.dumps(parse).encode())
        with pytest.raises(FixtureMiss):
            resolve_context(doctored, [1], client=engine.client)

        # Seeded queries resolve fine under the same (network-disabled) guard.
        ctx = resolve_context(doc, [1], client=engine.client)
        assert any(r.paper is not None for r in ctx.resolved)
