"""Client for an external scholarly-metadata service.

Three query kinds (title search, paper by id, citations of id) run against a
pluggable backend with an on-disk cache and a rate limiter. In fixture mode
every query resolves against local files named by query fingerprint and a
miss is a hard error, so test runs can guarantee they never touch the
network.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass
from difflib import SequenceMatcher
from pathlib import Path
from typing import Any, Callable, Protocol

from .errors import FixtureMiss, NetworkError, NotFound, RateLimited

MAX_CITATION_LIMIT = 1000
DEFAULT_TTL_SECONDS = 7 * 24 * 3600
DEFAULT_TITLE_THRESHOLD = 0.9

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class QueryKind(enum.Enum):
    BY_TITLE = "BY_TITLE"
    BY_ID = "BY_ID"
    CITATIONS_OF = "CITATIONS_OF"


@dataclass(frozen=True)
class CitationMention:
    """How a candidate paper cites one of ours: snippet plus intent tag."""

    cited: str
    snippet: str | None = None
    intent: str | None = None


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    title: str
    year: int | None = None
    tldr: str | None = None
    url: str | None = None
    embedding: tuple[float, ...] | None = None
    citation_contexts: tuple[CitationMention, ...] | None = None


def record_from_dict(data: dict) -> PaperRecord:
    contexts = None
    if data.get("citation_contexts"):
        contexts = tuple(
            CitationMention(cited=c["cited"], snippet=c.get("snippet"), intent=c.get("intent"))
            for c in data["citation_contexts"]
        )
    embedding = tuple(float(v) for v in data["embedding"]) if data.get("embedding") else None
    return PaperRecord(
        paper_id=str(data["paper_id"]),
        title=str(data.get("title") or ""),
        year=data.get("year"),
        tldr=data.get("tldr"),
        url=data.get("url"),
        embedding=embedding,
        citation_contexts=contexts,
    )


def record_to_dict(record: PaperRecord) -> dict:
    return {
        "paper_id": record.paper_id,
        "title": record.title,
        "year": record.year,
        "tldr": record.tldr,
        "url": record.url,
        "embedding": list(record.embedding) if record.embedding is not None else None,
        "citation_contexts": [
            {"cited": c.cited, "snippet": c.snippet, "intent": c.intent}
            for c in record.citation_contexts
        ]
        if record.citation_contexts is not None
        else None,
    }


# ---------------------------------------------------------------------------
# Title matching
# ---------------------------------------------------------------------------


def normalize_title(title: str) -> str:
    return " ".join(_TOKEN_RE.findall(title.lower()))


def token_set_ratio(a: str, b: str) -> float:
    """Fuzzy string similarity robust to word order and subsets."""
    tokens_a = set(_TOKEN_RE.findall(a.lower()))
    tokens_b = set(_TOKEN_RE.findall(b.lower()))
    if not tokens_a or not tokens_b:
        return 0.0
    common = " ".join(sorted(tokens_a & tokens_b))
    only_a = " ".join(sorted(tokens_a - tokens_b))
    only_b = " ".join(sorted(tokens_b - tokens_a))
    s1 = (common + " " + only_a).strip()
    s2 = (common + " " + only_b).strip()
    best = 0.0
    for x, y in ((common, s1), (common, s2), (s1, s2)):
        if not x and not y:
            continue
        best = max(best, SequenceMatcher(None, x, y).ratio())
    return best


# ---------------------------------------------------------------------------
# Query fingerprinting and fixtures
# ---------------------------------------------------------------------------


def query_fingerprint(kind: QueryKind, key: str, limit: int | None = None) -> str:
    if kind is QueryKind.BY_TITLE:
        normalized = normalize_title(key)
    else:
        normalized = key.strip()
    blob = f"{kind.value}|{normalized}|{limit if limit is not None else ''}"
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_fixture(fixture_dir: Path | str, kind: QueryKind, key: str, payload: dict, limit: int | None = None) -> Path:
    """Materialize one fixture response file; used by tests and demo setup."""
    fixture_dir = Path(fixture_dir)
    fixture_dir.mkdir(parents=True, exist_ok=True)
    path = fixture_dir / f"{query_fingerprint(kind, key, limit)}.json"
    path.write_text(json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Rate limiting
# ---------------------------------------------------------------------------


class RateLimiter:
    """Serializes callers to at most ``rate_per_sec`` acquisitions per second."""

    def __init__(
        self,
        rate_per_sec: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.min_interval = 1.0 / rate_per_sec if rate_per_sec > 0 else 0.0
        self._clock = clock
        self._sleep = sleep
        self._next_allowed: float | None = None
        self._lock = threading.Lock()

    def acquire(self) -> float:
        with self._lock:
            now = self._clock()
            if self._next_allowed is not None and now < self._next_allowed:
                self._sleep(self._next_allowed - now)
                now = max(self._clock(), self._next_allowed)
            self._next_allowed = now + self.min_interval
            return now


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


class MetadataBackend(Protocol):
    """Adapter contract: three endpoints returning plain payload dicts.

    ``search_title`` -> {"results": [paper, ...]}
    ``get_paper``    -> {"paper": paper | None}
    ``citations_of`` -> {"found": bool, "citations": [paper, ...]}
    """

    def search_title(self, title: str) -> dict: ...

    def get_paper(self, paper_id: str) -> dict: ...

    def citations_of(self, paper_id: str, limit: int) -> dict: ...


class HttpBackend:
    """REST adapter using a Semantic-Scholar-shaped API surface."""

    def __init__(self, base_url: str, api_key: str | None = None, timeout: float = 20.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout

    def _get(self, path: str, params: dict[str, Any]) -> dict:
        url = f"{self.base_url}{path}?{urllib.parse.urlencode(params)}"
        request = urllib.request.Request(url)
        if self.api_key:
            request.add_header("x-api-key", self.api_key)
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            if exc.code == 404:
                return {"_not_found": True}
            if exc.code == 429:
                raise RateLimited(f"backend throttled: {url}") from exc
            raise NetworkError(f"backend error {exc.code}: {url}") from exc
        except (urllib.error.URLError, TimeoutError) as exc:
            raise NetworkError(f"backend unreachable: {exc}") from exc

    def search_title(self, title: str) -> dict:
        data = self._get("/paper/search", {"query": title})
        results = data.get("data") or data.get("results") or []
        return {"results": results}

    def get_paper(self, paper_id: str) -> dict:
        data = self._get(f"/paper/{urllib.parse.quote(paper_id)}", {})
        if data.get("_not_found"):
            return {"paper": None}
        return {"paper": data}

    def citations_of(self, paper_id: str, limit: int) -> dict:
        data = self._get(f"/paper/{urllib.parse.quote(paper_id)}/citations", {"limit": limit})
        if data.get("_not_found"):
            return {"found": False, "citations": []}
        rows = data.get("data") or data.get("citations") or []
        citing = [row.get("citingPaper", row) for row in rows]
        return {"found": True, "citations": citing}


# ---------------------------------------------------------------------------
# Client
# ---------------------------------------------------------------------------


@dataclass
class MetadataConfig:
    fixture_dir: Path | None = None
    cache_dir: Path | None = None
    base_url: str = "https://api.semanticscholar.org/graph/v1"
    api_key: str | None = None
    rate_per_sec: float = 5.0
    ttl_seconds: float = DEFAULT_TTL_SECONDS
    title_threshold: float = DEFAULT_TITLE_THRESHOLD

    @property
    def fixture_mode(self) -> bool:
        return self.fixture_dir is not None


class MetadataClient:
    """Cached, rate-limited access to paper metadata.

    Safe for concurrent callers: cache access and rate limiting are
    internally serialized, and callers never observe partial cache writes.
    """

    def __init__(
        self,
        config: MetadataConfig,
        backend: MetadataBackend | None = None,
        clock: Callable[[], float] = time.time,
        limiter: RateLimiter | None = None,
    ):
        self.config = config
        self._clock = clock
        self._lock = threading.Lock()
        if config.fixture_mode:
            self._backend = None
            self._limiter = None
        else:
            self._backend = backend or HttpBackend(config.base_url, config.api_key)
            self._limiter = limiter or RateLimiter(config.rate_per_sec)

    # -- raw fetch with fixture/cache handling --

    def fetch_payload_bytes(self, kind: QueryKind, key: str, limit: int | None = None) -> bytes:
        """The exact payload bytes for a query (fixture file or cache entry)."""
        fingerprint = query_fingerprint(kind, key, limit)

        if self.config.fixture_mode:
            path = Path(self.config.fixture_dir) / f"{fingerprint}.json"
            if not path.exists():
                raise FixtureMiss(f"no fixture for {kind.value} {key!r} (fingerprint {fingerprint})")
            return path.read_bytes()

        with self._lock:
            cached = self._cache_read(fingerprint)
            if cached is not None:
                return cached

        payload = self._backend_call(kind, key, limit)
        raw = (json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n").encode("utf-8")
        with self._lock:
            # Re-check after the fetch; first writer wins, bytes stay stable.
            cached = self._cache_read(fingerprint)
            if cached is not None:
                return cached
            self._cache_write(fingerprint, raw)
        return raw

    def fetch_payload(self, kind: QueryKind, key: str, limit: int | None = None) -> dict:
        return json.loads(self.fetch_payload_bytes(kind, key, limit))

    def _backend_call(self, kind: QueryKind, key: str, limit: int | None) -> dict:
        assert self._backend is not None and self._limiter is not None
        self._limiter.acquire()
        if kind is QueryKind.BY_TITLE:
            return self._backend.search_title(key)
        if kind is QueryKind.BY_ID:
            return self._backend.get_paper(key)
        return self._backend.citations_of(key, limit or MAX_CITATION_LIMIT)

    def _cache_path(self, fingerprint: str) -> Path | None:
        if self.config.cache_dir is None:
            return None
        return Path(self.config.cache_dir) / f"{fingerprint}.json"

    def _cache_read(self, fingerprint: str) -> bytes | None:
        path = self._cache_path(fingerprint)
        if path is None or not path.exists():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        if self._clock() - entry["fetched_at"] > entry["ttl"]:
            return None
        return entry["payload"].encode("utf-8")

    def _cache_write(self, fingerprint: str, raw: bytes) -> None:
        path = self._cache_path(fingerprint)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {"fetched_at": self._clock(), "ttl": self.config.ttl_seconds, "payload": raw.decode("utf-8")}
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(entry, sort_keys=True, ensure_ascii=False), encoding="utf-8")
        tmp.replace(path)

    # -- typed operations --

    def lookup_title(self, title: str) -> PaperRecord | None:
        """Best title match above the similarity threshold, else None."""
        if not title.strip():
            return None
        payload = self.fetch_payload(QueryKind.BY_TITLE, title)
        best: tuple[float, str, dict] | None = None
        for row in payload.get("results", []):
            candidate_title = str(row.get("title") or "")
            score = token_set_ratio(title, candidate_title)
            if score < self.config.title_threshold:
                continue
            rank = (score, str(row.get("paper_id")))
            if best is None or score > best[0] or (score == best[0] and rank[1] < best[1]):
                best = (score, rank[1], row)
        if best is None:
            return None
        return record_from_dict(best[2])

    def get_paper(self, paper_id: str) -> PaperRecord:
        payload = self.fetch_payload(QueryKind.BY_ID, paper_id)
        row = payload.get("paper")
        if not row:
            raise NotFound(f"no paper with id {paper_id!r}")
        return record_from_dict(row)

    def citations_of(self, paper_id: str, limit: int = MAX_CITATION_LIMIT) -> list[PaperRecord]:
        """Up to ``limit`` citing papers, most recent first."""
        if limit > MAX_CITATION_LIMIT:
            raise ValueError(f"limit {limit} exceeds maximum {MAX_CITATION_LIMIT}")
        if limit < 1:
            raise ValueError("limit must be positive")
        payload = self.fetch_payload(QueryKind.CITATIONS_OF, paper_id, limit)
        if not payload.get("found", True):
            raise NotFound(f"no paper with id {paper_id!r}")
        records = [record_from_dict(row) for row in payload.get("citations", [])]
        records.sort(key=lambda r: (-(r.year if r.year is not None else -1), r.paper_id))
        return records[:limit]
