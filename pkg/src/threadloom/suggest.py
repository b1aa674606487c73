"""Ranks existing threads for new content via vertical-chain grouping.

Nesting encodes relatedness, so candidate targets are grouped as chains:
maximal root-to-leaf paths of the thread forest (depth-first, Unorganized
excluded). Each chain scores on two cosines against the target embedding:

* group similarity - cosine between the chain's member-embedding centroid
  and the target;
* cohesion - the best single member's cosine, which deprioritizes chains
  whose centroid happens to sit near the target while every member is far
  from it.

The rank objective is their product, preferring coherent over lopsided
matches. Within a chain, members are then ranked by their own similarity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .embeddings import EmbeddingProvider, Vector, centroid, cosine, safe_cosine
from .store import HoldingTank, Thread, Workspace, subtree_stamp

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 5


@dataclass(frozen=True)
class ThreadChain:
    member_thread_ids: tuple[str, ...]
    centroid: Vector

    @property
    def leaf_id(self) -> str:
        return self.member_thread_ids[-1]


@dataclass(frozen=True)
class MemberScore:
    thread_id: str
    similarity: float


@dataclass(frozen=True)
class RankedSuggestion:
    chain: ThreadChain
    group_similarity: float
    cohesion: float
    objective: float
    member_ranking: tuple[MemberScore, ...]


@dataclass(frozen=True)
class Suggestion:
    """Flattened, client-facing pick: one thread with its scores."""

    thread_id: str
    label: str
    score: float
    chain_objective: float


def chain_paths(ws: Workspace) -> list[list[Thread]]:
    """Maximal root-to-leaf paths, depth-first; one per leaf thread."""
    paths: list[list[Thread]] = []

    def descend(node: Thread, trail: list[Thread]) -> None:
        trail = trail + [node]
        if not node.children:
            paths.append(trail)
            return
        for child in node.children:
            descend(child, trail)

    for root in ws.threads:
        descend(root, [])
    return paths


def group_similarity(member_embeddings: list[Vector], target: Vector) -> float:
    """Cosine between the members' centroid and the target; may raise ZeroVector."""
    return cosine(centroid(member_embeddings), target)


def cohesion(member_embeddings: list[Vector], target: Vector) -> float:
    """Best member cosine against the target; may raise ZeroVector."""
    return max(cosine(m, target) for m in member_embeddings)


class ThreadSuggester:
    """Stateful ranker: holds the provider and the label-embedding cache.

    Label embeddings are cached on the Thread object and invalidated on
    rename (the store clears them); the provider fingerprint guards against
    a provider swap reusing stale vectors. Read-only over the workspace.
    """

    def __init__(self, provider: EmbeddingProvider):
        self.provider = provider

    def _embed_label(self, thread: Thread) -> Vector:
        fp = self.provider.fingerprint()
        if thread.embedding is None or thread.embedding_fingerprint != fp:
            thread.embedding = self.provider.embed(thread.label)
            thread.embedding_fingerprint = fp
        return thread.embedding

    def enumerate_chains(self, ws: Workspace) -> list[ThreadChain]:
        chains = []
        for path in chain_paths(ws):
            embeddings = [self._embed_label(t) for t in path]
            dim = len(embeddings[0])
            mean = tuple(sum(e[i] for e in embeddings) / len(embeddings) for i in range(dim))
            chains.append(ThreadChain(member_thread_ids=tuple(t.thread_id for t in path), centroid=mean))
        return chains

    def rank_chains(self, ws: Workspace, target_text: str) -> list[RankedSuggestion]:
        """All chains ordered by descending (group similarity x cohesion).

        Degenerate zero-norm embeddings score 0 rather than erroring, so
        empty or stop-word labels sink instead of crashing the ranking.
        Deterministic tie-break: most recent chain change, then leaf id.
        """
        target = self.provider.embed(target_text)
        ranked = []
        for path in chain_paths(ws):
            embeddings = [self._embed_label(t) for t in path]
            dim = len(embeddings[0])
            mean = tuple(sum(e[i] for e in embeddings) / len(embeddings) for i in range(dim))
            chain = ThreadChain(member_thread_ids=tuple(t.thread_id for t in path), centroid=mean)
            group_sim = safe_cosine(mean, target)
            member_sims = [safe_cosine(e, target) for e in embeddings]
            coh = max(member_sims)
            members = sorted(
                (MemberScore(thread_id=t.thread_id, similarity=s) for t, s in zip(path, member_sims)),
                key=lambda m: -m.similarity,
            )
            ranked.append(
                (
                    max(subtree_stamp(t) for t in path),
                    RankedSuggestion(
                        chain=chain,
                        group_similarity=group_sim,
                        cohesion=coh,
                        objective=group_sim * coh,
                        member_ranking=tuple(members),
                    ),
                )
            )
        ranked.sort(key=lambda pair: (-pair[1].objective, -pair[0], pair[1].chain.leaf_id))
        return [suggestion for _, suggestion in ranked]

    def suggest(self, ws: Workspace, target_text: str, k: int = DEFAULT_TOP_K) -> list[Suggestion]:
        """Top-k threads flattened chain by chain, best member first.

        A thread reached through several chains (shared ancestors) appears
        once, at its best position.
        """
        labels = {t.thread_id: t.label for t in ws.all_threads(include_unorganized=False)}
        out: list[Suggestion] = []
        seen: set[str] = set()
        for suggestion in self.rank_chains(ws, target_text):
            for member in suggestion.member_ranking:
                if member.thread_id in seen:
                    continue
                seen.add(member.thread_id)
                out.append(
                    Suggestion(
                        thread_id=member.thread_id,
                        label=labels[member.thread_id],
                        score=member.similarity,
                        chain_objective=suggestion.objective,
                    )
                )
                if len(out) >= k:
                    return out
        return out

    def suggest_for_tank(self, ws: Workspace, tank: HoldingTank, k: int = DEFAULT_TOP_K) -> list[Suggestion]:
        """Suggestions for the staged citation context; empty tank suggests nothing."""
        if tank.context is None or not tank.context.text.strip():
            return []
        return self.suggest(ws, tank.context.text, k=k)
