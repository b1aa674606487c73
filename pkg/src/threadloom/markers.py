"""Inline citation notation grammar.

Classifies a citation surface exactly as printed (``[3]``, ``[12 -- 15]``,
``[1, 4, 7]``, ``(Kang et al., 2022)``) and expands it to the individual
references it denotes. Range batches expand to every label they cover so
each referenced work can be handled (and deselected) individually.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass

# Refuse to expand absurd ranges (parser glitches like "[1 -- 1995]").
MAX_RANGE_SPAN = 200

_DASH_RE = re.compile(r"\s*(?:--|[-‐‑‒–—―])\s*")
_BRACKETED_RE = re.compile(r"^\[(?P<body>[^\[\]]+)\]$")
_INT_RE = re.compile(r"^\d+$")
_YEAR_RE = re.compile(r"(?P<year>(?:1[5-9]|20)\d{2})(?P<suffix>[a-z])?")
_LEADING_NOISE_RE = re.compile(r"^(?:e\.?g\.?|i\.?e\.?|cf\.?|see(?:\s+also)?|also)[,.\s]+", re.IGNORECASE)


class MarkerStyle(enum.Enum):
    NUMERIC_BRACKET = "NUMERIC_BRACKET"
    NUMERIC_RANGE = "NUMERIC_RANGE"
    NUMERIC_LIST = "NUMERIC_LIST"
    AUTHOR_YEAR = "AUTHOR_YEAR"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class MarkerParse:
    surface: str
    style: MarkerStyle
    expanded_keys: tuple[str, ...]

    def numeric_labels(self) -> list[int]:
        return [int(k) for k in self.expanded_keys if _INT_RE.match(k)]

    def author_year_candidates(self) -> list[tuple[str, int]]:
        """(normalized surname, year) pairs for AUTHOR_YEAR parses."""
        out = []
        for key in self.expanded_keys:
            surname, _, year = key.rpartition(":")
            digits = year[:4]
            if surname and digits.isdigit():
                out.append((surname, int(digits)))
        return out


def normalize_name(text: str) -> str:
    """Lowercase and strip diacritics for surname comparison."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return " ".join(stripped.lower().split())


def _expand_range(lo: int, hi: int) -> list[int] | None:
    if hi < lo or hi - lo > MAX_RANGE_SPAN:
        return None
    return list(range(lo, hi + 1))


def _parse_numeric_body(body: str) -> MarkerParse | None:
    body = body.strip()
    if not body:
        return None

    if _INT_RE.match(body):
        return MarkerParse(body, MarkerStyle.NUMERIC_BRACKET, (str(int(body)),))

    # Pure range: two integers joined by a dash variant.
    parts = _DASH_RE.split(body)
    if len(parts) == 2 and all(_INT_RE.match(p.strip()) for p in parts):
        lo, hi = int(parts[0]), int(parts[1])
        labels = _expand_range(lo, hi)
        if labels is None:
            return None
        return MarkerParse(body, MarkerStyle.NUMERIC_RANGE, tuple(str(n) for n in labels))

    # Comma-separated list; elements may themselves be ranges.
    if "," in body:
        labels: list[int] = []
        for item in body.split(","):
            item = item.strip()
            if not item:
                return None
            if _INT_RE.match(item):
                labels.append(int(item))
                continue
            sub = _DASH_RE.split(item)
            if len(sub) == 2 and all(_INT_RE.match(p.strip()) for p in sub):
                expanded = _expand_range(int(sub[0]), int(sub[1]))
                if expanded is None:
                    return None
                labels.extend(expanded)
                continue
            return None
        seen = set()
        unique = [n for n in labels if not (n in seen or seen.add(n))]
        return MarkerParse(body, MarkerStyle.NUMERIC_LIST, tuple(str(n) for n in unique))

    return None


def _first_surname(names: str) -> str | None:
    names = _LEADING_NOISE_RE.sub("", names.strip())
    names = names.strip(" ,.")
    if not names:
        return None
    for cut in (" et al", " and ", " & ", ","):
        pos = names.lower().find(cut)
        if pos > 0:
            names = names[:pos]
            break
    surname = normalize_name(names.strip(" ,."))
    if not surname or any(ch.isdigit() for ch in surname):
        return None
    return surname


def _parse_author_year_chunk(chunk: str) -> str | None:
    chunk = chunk.strip()
    match = _YEAR_RE.search(chunk)
    if not match:
        return None
    names = chunk[: match.start()].rstrip(" ,(;")
    surname = _first_surname(names)
    if not surname:
        return None
    return f"{surname}:{match.group('year')}{match.group('suffix') or ''}"


def _parse_author_year(surface: str) -> MarkerParse | None:
    body = surface.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    # Narrative form: "Kang et al. (2022)" keeps names outside the parens.
    body = body.replace("(", " ").replace(")", " ")
    keys = []
    for chunk in body.split(";"):
        key = _parse_author_year_chunk(chunk)
        if key is None:
            return None
        keys.append(key)
    if not keys:
        return None
    return MarkerParse(surface, MarkerStyle.AUTHOR_YEAR, tuple(keys))


def parse_marker(surface: str) -> MarkerParse:
    """Classify and expand one citation surface; UNKNOWN is the fallback."""
    stripped = surface.strip()
    if not stripped:
        return MarkerParse(surface, MarkerStyle.UNKNOWN, ())

    bracketed = _BRACKETED_RE.match(stripped)
    if bracketed:
        parsed = _parse_numeric_body(bracketed.group("body"))
        if parsed is not None:
            return MarkerParse(surface, parsed.style, parsed.expanded_keys)
        return MarkerParse(surface, MarkerStyle.UNKNOWN, ())

    if _YEAR_RE.search(stripped) and any(c.isalpha() for c in stripped):
        parsed = _parse_author_year(stripped)
        if parsed is not None:
            return parsed

    return MarkerParse(surface, MarkerStyle.UNKNOWN, ())
