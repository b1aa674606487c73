from __future__ import annotations

import math
import random

import pytest

from threadloom.embeddings import HashedBagOfWordsProvider, centroid, cosine, safe_cosine
from threadloom.errors import ZeroVector
from threadloom.store import Workspace
from threadloom.suggest import ThreadSuggester, chain_paths, cohesion, group_similarity

WORDS = [
    "graph", "neural", "methods", "user", "studies", "benchmark", "suites", "reading",
    "threads", "citation", "coverage", "parsing", "notes", "margins", "survey", "review",
]


class VectorProvider:
    """Returns fixed vectors per label; for engineered-geometry tests."""

    def __init__(self, table: dict[str, tuple[float, ...]], dim: int):
        self.table = dict(table)
        self.dim = dim

    def embed(self, text: str):
        return self.table[text]

    def fingerprint(self) -> str:
        return f"table:{sorted(self.table)!r}:{self.dim}"


class ScaledProvider:
    """Wraps a provider, multiplying every embedding by one positive scalar."""

    def __init__(self, base, scale: float):
        self.base = base
        self.scale = scale
        self.dim = base.dim

    def embed(self, text: str):
        return tuple(self.scale * v for v in self.base.embed(text))

    def fingerprint(self) -> str:
        return f"scaled:{self.scale}:{self.base.fingerprint()}"


# ---------------------------------------------------------------------------
# Independent brute-force oracle
# ---------------------------------------------------------------------------


def oracle_rank(ws: Workspace, text: str, provider) -> list[dict]:
    """Straight-from-the-definitions reimplementation of chain ranking."""

    def walk_paths(thread, prefix):
        path = prefix + [thread]
        if not thread.children:
            yield path
        for child in thread.children:
            yield from walk_paths(child, path)

    def cos(u, v):
        nu = math.sqrt(sum(x * x for x in u))
        nv = math.sqrt(sum(x * x for x in v))
        if nu == 0.0 or nv == 0.0:
            return 0.0
        return sum(x * y for x, y in zip(u, v)) / (nu * nv)

    def max_stamp(thread):
        best = thread.last_additive_change
        for child in thread.children:
            best = max(best, max_stamp(child))
        return best

    target = provider.embed(text)
    rows = []
    for root in ws.threads:
        for path in walk_paths(root, []):
            embeddings = [provider.embed(t.label) for t in path]
            mean = tuple(sum(e[i] for e in embeddings) / len(embeddings) for i in range(len(target)))
            group = cos(mean, target)
            member_sims = [cos(e, target) for e in embeddings]
            coh = max(member_sims)
            recency = max(max_stamp(t) for t in path)
            members = sorted(zip(path, member_sims), key=lambda pair: -pair[1])
            rows.append(
                {
                    "leaf": path[-1].thread_id,
                    "objective": group * coh,
                    "group": group,
                    "cohesion": coh,
                    "recency": recency,
                    "members": [(t.thread_id, s) for t, s in members],
                }
            )
    rows.sort(key=lambda r: (-r["objective"], -r["recency"], r["leaf"]))
    return rows


def random_workspace(rng: random.Random, max_nodes: int = 20) -> Workspace:
    ws = Workspace("rnd")
    nodes = []
    for _ in range(rng.randint(1, max_nodes)):
        label = " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 4)))
        parent = rng.choice(nodes).thread_id if nodes and rng.random() < 0.55 else None
        nodes.append(ws.create_thread(label, parent_id=parent))
    return ws


# ---------------------------------------------------------------------------
# Chain enumeration
# ---------------------------------------------------------------------------


def test_chains_are_root_to_leaf_paths():
    ws = Workspace()
    a = ws.create_thread("A")
    b = ws.create_thread("B", parent_id=a.thread_id)
    c = ws.create_thread("C", parent_id=a.thread_id)
    d = ws.create_thread("D")
    paths = [[t.thread_id for t in path] for path in chain_paths(ws)]
    assert sorted(paths) == sorted(
        [[a.thread_id, b.thread_id], [a.thread_id, c.thread_id], [d.thread_id]]
    )


def test_empty_workspace_has_no_chains():
    assert chain_paths(Workspace()) == []


def test_chain_count_equals_leaf_count_oracle():
    rng = random.Random(4242)
    for _ in range(40):
        ws = random_workspace(rng, max_nodes=50)
        leaves = sum(1 for root in ws.threads for t in root.walk() if not t.children)
        assert len(chain_paths(ws)) == leaves


def test_enumerate_chains_carries_centroids():
    ws = Workspace()
    a = ws.create_thread("alpha beta")
    ws.create_thread("gamma", parent_id=a.thread_id)
    provider = HashedBagOfWordsProvider(dim=16, seed="t")
    chains = ThreadSuggester(provider).enumerate_chains(ws)
    assert len(chains) == 1
    manual = centroid([provider.embed("alpha beta"), provider.embed("gamma")])
    assert chains[0].centroid == manual


# ---------------------------------------------------------------------------
# Similarity measures
# ---------------------------------------------------------------------------


def test_group_similarity_of_identical_vectors_is_one():
    v = (0.3, 0.4, 0.0)
    assert group_similarity([v], v) == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_centroid_scores_zero():
    assert group_similarity([(0.0, 1.0)], (1.0, 0.0)) == pytest.approx(0.0, abs=1e-12)


def test_three_member_chain_matches_hand_computed_cosine():
    # centroid of (1,0,0,0), (0,1,0,0), (1,1,0,0) is (2/3, 2/3, 0, 0);
    # against target (1,0,0,0): cos = (2/3) / (2*sqrt(2)/3) = 1/sqrt(2).
    members = [(1.0, 0.0, 0.0, 0.0), (0.0, 1.0, 0.0, 0.0), (1.0, 1.0, 0.0, 0.0)]
    target = (1.0, 0.0, 0.0, 0.0)
    assert group_similarity(members, target) == pytest.approx(1.0 / math.sqrt(2), abs=1e-12)
    assert cohesion(members, target) == pytest.approx(1.0, abs=1e-12)


def test_cohesion_is_max_over_members():
    rng = random.Random(99)
    for _ in range(200):
        members = [tuple(rng.uniform(-1, 1) for _ in range(5)) for _ in range(rng.randint(1, 6))]
        target = tuple(rng.uniform(-1, 1) for _ in range(5))
        assert cohesion(members, target) == pytest.approx(
            max(cosine(m, target) for m in members), abs=1e-12
        )


def test_zero_vector_raises_at_measure_level_but_not_in_ranking():
    with pytest.raises(ZeroVector):
        group_similarity([(0.0, 0.0)], (1.0, 0.0))
    assert safe_cosine((0.0, 0.0), (1.0, 0.0)) == 0.0

    ws = Workspace()
    ws.create_thread("??")  # tokenless label embeds to the zero vector
    ws.create_thread("graph methods")
    provider = HashedBagOfWordsProvider(dim=16, seed="t")
    ranked = ThreadSuggester(provider).rank_chains(ws, "graph methods")
    assert len(ranked) == 2
    assert ranked[-1].objective == 0.0


# ---------------------------------------------------------------------------
# The multiplicative objective
# ---------------------------------------------------------------------------


def _two_member_chain_vectors(member_cos: float, group_cos: float):
    """Unit vectors for a 2-member chain with the given member cosine to the
    target (1,0,0) and the given centroid cosine."""
    a = member_cos
    b = math.sqrt(1.0 - a * a)
    cos_theta = 2 * a * a * (1.0 / (group_cos * group_cos) - 1.0) / (b * b) - 1.0
    assert -1.0 <= cos_theta <= 1.0, "requested geometry is not constructible"
    sin_theta = math.sqrt(1.0 - cos_theta * cos_theta)
    m1 = (a, b, 0.0)
    m2 = (a, b * cos_theta, b * sin_theta)
    return m1, m2


def test_worked_example_lopsided_chain_loses():
    # Chain X: group similarity 0.9 x cohesion 0.2 -> 0.18
    # Chain Y: group similarity 0.6 x cohesion 0.5 -> 0.30, so Y wins.
    x1, x2 = _two_member_chain_vectors(member_cos=0.2, group_cos=0.9)
    y1, y2 = _two_member_chain_vectors(member_cos=0.5, group_cos=0.6)
    provider = VectorProvider(
        {"x root": x1, "x leaf": x2, "y root": y1, "y leaf": y2, "target": (1.0, 0.0, 0.0)}, dim=3
    )
    ws = Workspace()
    xr = ws.create_thread("x root")
    ws.create_thread("x leaf", parent_id=xr.thread_id)
    yr = ws.create_thread("y root")
    ws.create_thread("y leaf", parent_id=yr.thread_id)

    ranked = ThreadSuggester(provider).rank_chains(ws, "target")
    assert [s.chain.leaf_id for s in ranked] == ["t0004", "t0002"]
    assert ranked[0].group_similarity == pytest.approx(0.6, abs=1e-9)
    assert ranked[0].cohesion == pytest.approx(0.5, abs=1e-9)
    assert ranked[0].objective == pytest.approx(0.30, abs=1e-9)
    assert ranked[1].objective == pytest.approx(0.18, abs=1e-9)


def test_rank_matches_brute_force_oracle_on_random_workspaces():
    rng = random.Random(20240818)
    provider = HashedBagOfWordsProvider(dim=32, seed="oracle")
    for _ in range(25):
        ws = random_workspace(rng)
        text = " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 5)))
        expected = oracle_rank(ws, text, provider)
        got = ThreadSuggester(provider).rank_chains(ws, text)
        assert [s.chain.leaf_id for s in got] == [r["leaf"] for r in expected]
        assert [s.objective for s in got] == [r["objective"] for r in expected]
        assert [[m.thread_id for m in s.member_ranking] for s in got] == [
            [tid for tid, _ in r["members"]] for r in expected
        ]


def test_rank_output_is_permutation_of_chains():
    rng = random.Random(5)
    ws = random_workspace(rng)
    provider = HashedBagOfWordsProvider(dim=16, seed="t")
    suggester = ThreadSuggester(provider)
    ranked = suggester.rank_chains(ws, "graph methods")
    assert sorted(s.chain.member_thread_ids for s in ranked) == sorted(
        c.member_thread_ids for c in suggester.enumerate_chains(ws)
    )


def test_scale_invariance_of_orderings():
    rng = random.Random(31415)
    base = HashedBagOfWordsProvider(dim=32, seed="scale")
    for _ in range(20):
        ws = random_workspace(rng)
        text = " ".join(rng.choice(WORDS) for _ in range(3))
        reference = ThreadSuggester(base).rank_chains(ws, text)
        ref_order = [s.chain.leaf_id for s in reference]
        ref_members = [[m.thread_id for m in s.member_ranking] for s in reference]
        for scale in (0.25, 3.0, 117.0):
            scaled = ThreadSuggester(ScaledProvider(base, scale)).rank_chains(ws, text)
            assert [s.chain.leaf_id for s in scaled] == ref_order
            assert [[m.thread_id for m in s.member_ranking] for s in scaled] == ref_members


def test_rankings_are_reproducible_bit_for_bit():
    ws = Workspace()
    a = ws.create_thread("graph neural methods")
    ws.create_thread("benchmark suites", parent_id=a.thread_id)
    ws.create_thread("user studies")
    provider = HashedBagOfWordsProvider(dim=64, seed="repro")
    first = ThreadSuggester(provider).rank_chains(ws, "reading threads")
    second = ThreadSuggester(provider).rank_chains(ws, "reading threads")
    assert first == second


# ---------------------------------------------------------------------------
# Flattened suggestions
# ---------------------------------------------------------------------------


def test_empty_workspace_suggests_nothing():
    provider = HashedBagOfWordsProvider(dim=16, seed="t")
    assert ThreadSuggester(provider).suggest(Workspace(), "anything") == []


def test_exact_label_match_ranks_first():
    ws = Workspace()
    ws.create_thread("graph neural methods")
    target = ws.create_thread("user studies")
    ws.create_thread("benchmark suites")
    provider = HashedBagOfWordsProvider(dim=64, seed="t")
    suggestions = ThreadSuggester(provider).suggest(ws, "user studies")
    assert suggestions[0].thread_id == target.thread_id
    assert suggestions[0].score == pytest.approx(1.0, abs=1e-12)


def test_top_1_is_argmax_chains_best_member():
    rng = random.Random(77)
    provider = HashedBagOfWordsProvider(dim=32, seed="t")
    for _ in range(10):
        ws = random_workspace(rng)
        text = " ".join(rng.choice(WORDS) for _ in range(3))
        suggester = ThreadSuggester(provider)
        ranked = suggester.rank_chains(ws, text)
        top = suggester.suggest(ws, text, k=1)
        assert len(top) == 1
        assert top[0].thread_id == ranked[0].member_ranking[0].thread_id


def test_flattened_suggestions_deduplicate_shared_ancestors():
    ws = Workspace()
    root = ws.create_thread("graph methods")
    ws.create_thread("graph sampling", parent_id=root.thread_id)
    ws.create_thread("graph pruning", parent_id=root.thread_id)
    provider = HashedBagOfWordsProvider(dim=32, seed="t")
    suggestions = ThreadSuggester(provider).suggest(ws, "graph methods", k=10)
    ids = [s.thread_id for s in suggestions]
    assert len(ids) == len(set(ids))
    assert set(ids) == {t.thread_id for t in ws.all_threads(include_unorganized=False)}


def test_suggest_for_tank_uses_context_text():
    from threadloom.highlights import CitationContext
    from threadloom.store import HoldingTank

    ws = Workspace()
    target = ws.create_thread("user studies")
    ws.create_thread("graph methods")
    ctx = CitationContext(
        context_id="d:0-0",
        doc_id="d",
        core_sentences=(0,),
        context_sentences=(0,),
        text="user studies",
        found_markers=(),
        resolved=(),
    )
    provider = HashedBagOfWordsProvider(dim=32, seed="t")
    suggester = ThreadSuggester(provider)
    assert suggester.suggest_for_tank(ws, HoldingTank(), k=3) == []
    suggestions = suggester.suggest_for_tank(ws, HoldingTank(context=ctx), k=3)
    assert suggestions and suggestions[0].thread_id == target.thread_id
