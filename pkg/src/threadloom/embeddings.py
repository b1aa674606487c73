"""Embedding providers and the vector math used by ranking.

The engine never trains or serves models; it consumes any provider honoring
the small contract below. The in-repo provider hashes token counts into a
fixed-dimension vector, which makes every ranking bit-reproducible without a
model download. Providers must be safe for concurrent calls.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import urllib.request
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .errors import ZeroVector

_TOKEN_RE = re.compile(r"[a-z0-9]+")

Vector = tuple[float, ...]


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, text: str) -> Vector: ...

    def fingerprint(self) -> str:
        """Stable id of the provider configuration, for cache keying."""
        ...


def norm(v: Sequence[float]) -> float:
    return math.sqrt(sum(x * x for x in v))


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    na, nb = norm(a), norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero-norm vector")
    return sum(x * y for x, y in zip(a, b)) / (na * nb)


def safe_cosine(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine that scores degenerate (zero-norm) vectors as 0 instead of raising."""
    try:
        return cosine(a, b)
    except ZeroVector:
        return 0.0


def centroid(vectors: Iterable[Sequence[float]]) -> Vector:
    vecs = [tuple(v) for v in vectors]
    if not vecs:
        raise ZeroVector("centroid of no vectors")
    dim = len(vecs[0])
    return tuple(sum(v[i] for v in vecs) / len(vecs) for i in range(dim))


class HashedBagOfWordsProvider:
    """Deterministic embedding: hashed token counts, L2-normalized.

    Token positions come from a stable digest of (seed, token), so vectors
    are identical across processes and platforms. Texts with no tokens embed
    to the zero vector, which ranking treats as similarity 0 everywhere.
    """

    name = "hashed-bag-of-words"

    def __init__(self, dim: int = 64, seed: str = "threadloom"):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed

    def fingerprint(self) -> str:
        return f"{self.name}:{self.dim}:{self.seed}"

    def _slot(self, token: str) -> int:
        digest = hashlib.sha1(f"{self.seed}:{token}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dim

    def embed(self, text: str) -> Vector:
        counts = [0.0] * self.dim
        for token in _TOKEN_RE.findall(text.lower()):
            counts[self._slot(token)] += 1.0
        total = norm(counts)
        if total == 0.0:
            return tuple(counts)
        return tuple(c / total for c in counts)


class RemoteEmbeddingProvider:
    """Calls an embedding endpoint; responses cached on disk by text digest."""

    name = "remote"

    def __init__(self, endpoint: str, dim: int, cache_dir: Path | str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.dim = dim
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.timeout = timeout

    def fingerprint(self) -> str:
        return f"{self.name}:{self.dim}:{self.endpoint}"

    def _cache_path(self, text: str) -> Path | None:
        if self.cache_dir is None:
            return None
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return self.cache_dir / f"{digest}.json"

    def embed(self, text: str) -> Vector:
        path = self._cache_path(text)
        if path is not None and path.exists():
            return tuple(json.loads(path.read_text(encoding="utf-8")))
        body = json.dumps({"texts": [text]}).encode("utf-8")
        request = urllib.request.Request(self.endpoint, data=body, headers={"Content-Type": "application/json"})
        with urllib.request.urlopen(request, timeout=self.timeout) as resp:
            data = json.loads(resp.read().decode("utf-8"))
        vector = tuple(float(v) for v in data["embeddings"][0])
        if len(vector) != self.dim:
            raise ValueError(f"endpoint returned dim {len(vector)}, expected {self.dim}")
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(list(vector)), encoding="utf-8")
        return vector


def build_provider(settings: dict) -> EmbeddingProvider:
    """Construct a provider from engine-config settings."""
    name = settings.get("name", HashedBagOfWordsProvider.name)
    if name == HashedBagOfWordsProvider.name:
        return HashedBagOfWordsProvider(
            dim=int(settings.get("dim", 64)),
            seed=str(settings.get("seed", "threadloom")),
        )
    if name == RemoteEmbeddingProvider.name:
        return RemoteEmbeddingProvider(
            endpoint=settings["endpoint"],
            dim=int(settings["dim"]),
            cache_dir=settings.get("cache_dir"),
        )
    raise ValueError(f"unknown embedding provider {name!r}")
