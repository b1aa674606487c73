"""Per-thread paper discovery by citation coverage, plus the overview builder.

A candidate's relevance signal is coverage: how many distinct references of
the thread it cites. Candidate gathering fetches up to 1,000 direct citing
papers per thread reference; the 50 highest-coverage candidates are then
sampled and presented most recent first, with same-year ties broken by
cosine similarity between the candidate embedding and the centroid of the
thread references' embeddings. Longer citation chains are out of scope.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .embeddings import centroid, safe_cosine
from .errors import NetworkError, NoResolvedRefs, NotFound, RateLimited
from .metadata import MetadataClient, PaperRecord, record_to_dict
from .store import ClipKind, PaperRef, Thread, Workspace, clip_to_dict, normalized_title, paper_to_dict

logger = logging.getLogger(__name__)

PER_REFERENCE_FETCH_CAP = 1000
SAMPLE_SIZE = 50

_SURROGATE_PREFIXES = ("doc:", "local:", "title:")


def is_external_id(paper_id: str | None) -> bool:
    return bool(paper_id) and not paper_id.startswith(_SURROGATE_PREFIXES)


@dataclass(frozen=True)
class CoverageScore:
    candidate: str
    covered: frozenset[str]

    @property
    def count(self) -> int:
        return len(self.covered)


@dataclass(frozen=True)
class Recommendation:
    paper: PaperRecord
    coverage: CoverageScore
    cosine_to_centroid: float | None
    rank: int


@dataclass(frozen=True)
class RecommendationSet:
    thread_id: str
    revision: int
    items: tuple[Recommendation, ...]


@dataclass
class CandidatePool:
    """Aggregated citing papers: coverage per candidate plus their records."""

    coverage: dict[str, set[str]]
    records: dict[str, PaperRecord]

    def scores(self) -> dict[str, CoverageScore]:
        return {cid: CoverageScore(candidate=cid, covered=frozenset(covered)) for cid, covered in self.coverage.items()}


def subtree_papers(thread: Thread) -> list[PaperRef]:
    papers = []
    for node in thread.walk():
        papers.extend(node.papers)
    return papers


def thread_reference_ids(thread: Thread) -> list[str]:
    """Distinct external reference ids in the thread's subtree, in order."""
    seen = set()
    out = []
    for paper in subtree_papers(thread):
        if is_external_id(paper.paper_id) and paper.paper_id not in seen:
            seen.add(paper.paper_id)
            out.append(paper.paper_id)
    return out


def collect_citing(
    thread: Thread,
    client: MetadataClient,
    per_ref_limit: int = PER_REFERENCE_FETCH_CAP,
) -> CandidatePool:
    """Fetch citing papers per thread reference and aggregate coverage.

    Candidates already present in the thread are excluded. Per-reference
    fetch failures degrade to warnings; the pool is built from whatever
    succeeded.
    """
    refs = thread_reference_ids(thread)
    if not refs:
        raise NoResolvedRefs(f"thread {thread.thread_id!r} has no externally resolved references")

    existing_keys: set[str] = set()
    for paper in subtree_papers(thread):
        existing_keys.update(paper.identity_keys())

    pool = CandidatePool(coverage={}, records={})
    for ref in refs:
        try:
            citing = client.citations_of(ref, limit=per_ref_limit)
        except (NotFound, NetworkError, RateLimited) as exc:
            logger.warning("skipping citations of %s: %s", ref, exc)
            continue
        for record in citing:
            candidate_keys = {f"id:{record.paper_id}"}
            if record.title.strip():
                candidate_keys.add(f"title:{normalized_title(record.title)}")
            if candidate_keys & existing_keys:
                continue
            pool.coverage.setdefault(record.paper_id, set()).add(ref)
            pool.records.setdefault(record.paper_id, record)
    return pool


def reference_centroid(thread: Thread, client: MetadataClient) -> tuple[float, ...] | None:
    """Centroid of the thread references' embeddings; None when none embed."""
    vectors = []
    for ref in thread_reference_ids(thread):
        try:
            record = client.get_paper(ref)
        except (NotFound, NetworkError, RateLimited):
            continue
        if record.embedding is not None:
            vectors.append(record.embedding)
    if not vectors:
        return None
    return centroid(vectors)


def rank_recommendations(
    pool: CandidatePool,
    thread: Thread,
    client: MetadataClient,
    sample_size: int = SAMPLE_SIZE,
) -> list[Recommendation]:
    """Cap to the top-coverage sample, then sort by recency.

    The sample keeps the ``sample_size`` highest-coverage candidates (ties
    at the cut admitted by higher year, then paper id). The sample itself
    is ordered most recent year first; same-year ties order by descending
    cosine to the thread-reference centroid, candidates without embeddings
    after embedded ones, then paper id.
    """
    scores = pool.scores()
    if not scores:
        return []

    def year_of(cid: str) -> int:
        year = pool.records[cid].year
        return year if year is not None else -1

    sampled = sorted(scores, key=lambda cid: (-scores[cid].count, -year_of(cid), cid))[:sample_size]

    ref_centroid = reference_centroid(thread, client)
    cosines: dict[str, float | None] = {}
    for cid in sampled:
        embedding = pool.records[cid].embedding
        if ref_centroid is not None and embedding is not None:
            cosines[cid] = safe_cosine(embedding, ref_centroid)
        else:
            cosines[cid] = None

    def sort_key(cid: str):
        cos = cosines[cid]
        return (-year_of(cid), 0 if cos is not None else 1, -(cos if cos is not None else 0.0), cid)

    ordered = sorted(sampled, key=sort_key)
    return [
        Recommendation(paper=pool.records[cid], coverage=scores[cid], cosine_to_centroid=cosines[cid], rank=i + 1)
        for i, cid in enumerate(ordered)
    ]


def refresh_thread(
    thread: Thread,
    revision: int,
    client: MetadataClient,
    per_ref_limit: int = PER_REFERENCE_FETCH_CAP,
    sample_size: int = SAMPLE_SIZE,
) -> RecommendationSet:
    """Recompute recommendations for a thread snapshot taken at ``revision``.

    Taking a snapshot lets the slow fetch run without holding the workspace
    lock, so drawer mutations are never blocked behind it.
    """
    pool = collect_citing(thread, client, per_ref_limit=per_ref_limit)
    items = rank_recommendations(pool, thread, client, sample_size=sample_size)
    return RecommendationSet(thread_id=thread.thread_id, revision=revision, items=tuple(items))


def refresh(
    ws: Workspace,
    thread_id: str,
    client: MetadataClient,
    per_ref_limit: int = PER_REFERENCE_FETCH_CAP,
    sample_size: int = SAMPLE_SIZE,
) -> RecommendationSet:
    """Recompute recommendations against the thread's current references."""
    thread = ws.require_thread(thread_id)
    return refresh_thread(
        thread, ws.revision, client, per_ref_limit=per_ref_limit, sample_size=sample_size
    )


def recommendation_to_dict(rec: Recommendation) -> dict:
    return {
        "rank": rec.rank,
        "paper": record_to_dict(rec.paper),
        "coverage": sorted(rec.coverage.covered),
        "coverage_count": rec.coverage.count,
        "cosine_to_centroid": rec.cosine_to_centroid,
    }


# ---------------------------------------------------------------------------
# Overview
# ---------------------------------------------------------------------------


def _group_references(thread: Thread) -> list[dict]:
    """References grouped by originating citation context, ungrouped last."""
    context_text: dict[str, str | None] = {}
    for clip in thread.clips:
        if clip.kind is ClipKind.TEXT and clip.source.context_id:
            context_text.setdefault(clip.source.context_id, str(clip.payload))

    groups: dict[str | None, list[PaperRef]] = {}
    order: list[str | None] = []
    for paper in thread.papers:
        key = paper.source_context
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(paper)

    out = []
    for key in [k for k in order if k is not None] + ([None] if None in groups else []):
        out.append(
            {
                "context_id": key,
                "context_text": context_text.get(key) if key else None,
                "papers": [paper_to_dict(p) for p in groups[key]],
            }
        )
    return out


def _overview_node(thread: Thread, depth: int) -> dict:
    return {
        "thread_id": thread.thread_id,
        "label": thread.label,
        "depth": depth,
        "clips": [clip_to_dict(c) for c in thread.clips],
        "reference_groups": _group_references(thread),
        "children": [_overview_node(c, depth + 1) for c in thread.children],
    }


def build_overview(ws: Workspace, thread_id: str, recommendations: RecommendationSet | None = None) -> dict:
    """The thread and its descendants as an indented-tree document.

    Per node: clips with source annotations first, then references grouped
    by citation context (ungrouped last), then child threads; any supplied
    recommendations are appended at the document level.
    """
    thread = ws.require_thread(thread_id)
    doc = _overview_node(thread, 0)
    doc["revision"] = ws.revision
    doc["recommendations"] = [recommendation_to_dict(r) for r in recommendations.items] if recommendations else []
    return doc


def _outline_clip_line(clip: dict) -> str:
    source = clip["source"]
    if clip["kind"] == "IMAGE":
        body = f"image {clip['payload']['image'][:12]} (page {source['page']})"
    else:
        body = f"\"{clip['payload']['text']}\""
    where = source["doc_id"]
    if source.get("sentences"):
        where += f" s{source['sentences'][0]}-{source['sentences'][-1]}"
    return f"* [{where}] {body}"


def _outline_paper_line(paper: dict) -> str:
    year = f" ({paper['year']})" if paper.get("year") else ""
    surface = f" {paper['surface']}" if paper.get("surface") else ""
    return f"- {paper.get('title') or paper.get('paper_id')}{year}{surface}"


def _render_node(node: dict, lines: list[str]) -> None:
    pad = "  " * node["depth"]
    lines.append(f"{pad}- {node['label']} [{node['thread_id']}]")
    inner = pad + "  "
    for clip in node["clips"]:
        lines.append(inner + _outline_clip_line(clip))
    for group in node["reference_groups"]:
        header = group["context_id"] or "ungrouped"
        lines.append(f"{inner}@ {header}")
        for paper in group["papers"]:
            lines.append(inner + "  " + _outline_paper_line(paper))
    for child in node["children"]:
        _render_node(child, lines)


def render_outline(overview: dict) -> str:
    """Stable plain-text rendering of an overview document."""
    lines: list[str] = []
    _render_node(overview, lines)
    if overview.get("recommendations"):
        lines.append("recommendations:")
        for rec in overview["recommendations"]:
            paper = rec["paper"]
            year = f" ({paper['year']})" if paper.get("year") else ""
            lines.append(f"  {rec['rank']}. {paper['title']}{year} coverage={rec['coverage_count']}")
    return "\n".join(lines) + "\n"


def export_outline(ws: Workspace, thread_id: str, recommendations: RecommendationSet | None = None) -> str:
    """Outline text for one thread, or the whole drawer when ``thread_id`` is "all"."""
    if thread_id == "all":
        return "".join(render_outline(build_overview(ws, t.thread_id)) for t in ws.drawer())
    return render_outline(build_overview(ws, thread_id, recommendations))
