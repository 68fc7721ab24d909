"""Parsing, normalization, and splitting of POS-tagged news corpora.

The on-disk carrier formats are deliberately plain so that any tagger's
output can be adapted:

* POS corpus: UTF-8 TSV with columns FORM, POS; a blank line ends a
  sentence; lines starting with ``#`` are comments.
* Articles: JSONL, one article object per line.
* Category map: TSV ``raw<TAB>canonical``.
"""

from __future__ import annotations

import json
import logging
import random
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

log = logging.getLogger(__name__)

TATWEEL = "ـ"

# The 17 canonical article categories ("Heath" is spelled as shipped in
# the upstream category inventory).
CANONICAL_CATEGORIES = frozenset({
    "Politics",
    "History",
    "Society",
    "Media",
    "Entertainments",
    "Weather",
    "Sports",
    "Social Media",
    "Heath",
    "Culture and Art",
    "Economy",
    "Religion",
    "Education",
    "Technology",
    "Fashion",
    "Local News",
    "International News",
})

UNKNOWN_CATEGORY = "Unknown"


class CorpusFormatError(ValueError):
    """Malformed corpus input; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str

    def __post_init__(self) -> None:
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if not self.pos:
            raise ValueError("token pos must be non-empty")


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[Token, ...]
    source_article: str | None = None

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")

    @property
    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)


@dataclass(frozen=True)
class Article:
    newspaper_name_ar: str
    newspaper_name_en: str
    country: str
    newspaper_link: str
    title: str
    content: str
    url: str
    date: str
    topic: str
    summary: str | None = None
    author: str | None = None

    def __post_init__(self) -> None:
        if not self.title:
            raise ValueError("article title must be non-empty")
        if not self.content:
            raise ValueError("article content must be non-empty")

    def to_dict(self) -> dict:
        d = {
            "newspaper_name_ar": self.newspaper_name_ar,
            "newspaper_name_en": self.newspaper_name_en,
            "country": self.country,
            "newspaper_link": self.newspaper_link,
            "title": self.title,
            "content": self.content,
            "summary": self.summary,
            "author": self.author,
            "url": self.url,
            "date": self.date,
            "topic": self.topic,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Article":
        required = [
            "newspaper_name_ar", "newspaper_name_en", "country",
            "newspaper_link", "title", "content", "url", "date", "topic",
        ]
        missing = [k for k in required if k not in d]
        if missing:
            raise ValueError(f"article missing fields: {', '.join(missing)}")
        return cls(
            newspaper_name_ar=d["newspaper_name_ar"],
            newspaper_name_en=d["newspaper_name_en"],
            country=d["country"],
            newspaper_link=d["newspaper_link"],
            title=d["title"],
            content=d["content"],
            url=d["url"],
            date=d["date"],
            topic=d["topic"],
            summary=d.get("summary"),
            author=d.get("author"),
        )


# --------------------------------------------------------------------
# POS corpus reading and writing
# --------------------------------------------------------------------

def parse_pos_corpus(lines: Iterable[str], id_prefix: str = "s") -> list[Sentence]:
    """Parse a two-column FORM<TAB>POS stream into sentences.

    A blank line terminates the current sentence and a trailing
    unterminated sentence is still emitted. ``#``-prefixed lines are
    comments. Surfaces are NFC-normalized on ingestion; tags are kept
    byte-exact. Sentence ids are assigned sequentially in stream order.
    """
    sentences: list[Sentence] = []
    current: list[Token] = []

    def flush() -> None:
        if current:
            sid = f"{id_prefix}{len(sentences) + 1:06d}"
            sentences.append(Sentence(id=sid, tokens=tuple(current)))
            current.clear()

    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if line.startswith("#"):
            continue
        if not line.strip():
            flush()
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise CorpusFormatError(
                f"expected 2 tab-separated columns, got {len(parts)}", line_no)
        surface, pos = parts
        if not surface or not pos:
            raise CorpusFormatError("empty FORM or POS field", line_no)
        # Whitespace inside a field would make space-joined sentence text
        # ambiguous downstream.
        if any(c.isspace() for c in surface) or any(c.isspace() for c in pos):
            raise CorpusFormatError("whitespace inside FORM or POS field",
                                    line_no)
        current.append(Token(unicodedata.normalize("NFC", surface), pos))
    flush()
    return sentences


def read_pos_corpus(path: str | Path, id_prefix: str = "s") -> list[Sentence]:
    with open(path, encoding="utf-8") as fh:
        return parse_pos_corpus(fh, id_prefix=id_prefix)


def serialize_pos_corpus(sentences: Iterable[Sentence]) -> str:
    """Render sentences back to the TSV carrier format."""
    blocks = []
    for sent in sentences:
        blocks.append("\n".join(f"{t.surface}\t{t.pos}" for t in sent.tokens))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def write_pos_corpus(sentences: Iterable[Sentence], path: str | Path) -> None:
    Path(path).write_text(serialize_pos_corpus(sentences), encoding="utf-8")


# --------------------------------------------------------------------
# Text normalization
# --------------------------------------------------------------------

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)

# Characters to keep: Arabic letters (tatweel excluded), Arabic-Indic and
# extended Arabic-Indic digits, Latin letters, ASCII digits, whitespace.
# Everything else (punctuation, symbols, emoji, emoticons, harakat) is
# replaced by a space so word boundaries survive.
_DISALLOWED_RE = re.compile(
    r"[^0-9A-Za-z"
    r"ء-ؿف-ي"   # Arabic letters around the tatweel slot
    r"٠-٩۰-۹"   # Arabic-Indic / extended digits
    r"ٮٯٱ-ۓە"  # supplemental Arabic letters
    r"\s]+"
)
_ELONGATION_RE = re.compile(r"(.)\1{2,}", re.DOTALL)
_WS_RE = re.compile(r"\s+")


def normalize_text(raw: str) -> str:
    """Light cleanup applied before embedding-style processing.

    Removes URLs, emoji/emoticons, punctuation and other non-letter
    symbols, strips the tatweel, collapses runs of three or more
    identical characters down to one, and squeezes whitespace. Total and
    idempotent.
    """
    text = unicodedata.normalize("NFC", raw)
    text = _URL_RE.sub(" ", text)
    text = text.replace(TATWEEL, "")
    text = _DISALLOWED_RE.sub(" ", text)
    text = _ELONGATION_RE.sub(r"\1", text)
    return _WS_RE.sub(" ", text).strip()


# --------------------------------------------------------------------
# Category normalization
# --------------------------------------------------------------------

@dataclass
class CategoryMap:
    """Maps raw site categories to the 17 canonical ones.

    Keys are matched case- and whitespace-insensitively. The full raw
    inventory is site-specific, so the map is loaded from an editable
    TSV config rather than hard-coded.
    """

    entries: dict[str, str] = field(default_factory=dict)

    @staticmethod
    def _key(raw: str) -> str:
        return " ".join(raw.split()).casefold()

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "CategoryMap":
        entries: dict[str, str] = {}
        for raw, canonical in pairs:
            if canonical not in CANONICAL_CATEGORIES:
                raise ValueError(
                    f"{canonical!r} is not one of the canonical categories")
            entries[cls._key(raw)] = canonical
        return cls(entries)

    def lookup(self, raw: str) -> str | None:
        return self.entries.get(self._key(raw))


def load_category_map(path: str | Path) -> CategoryMap:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise CorpusFormatError("expected raw<TAB>canonical", line_no)
            pairs.append((parts[0], parts[1]))
    try:
        return CategoryMap.from_pairs(pairs)
    except ValueError as exc:
        raise CorpusFormatError(str(exc), 0) from exc


def normalize_category(raw: str, category_map: CategoryMap) -> str:
    """Map a raw category to its canonical form, or ``Unknown``."""
    found = category_map.lookup(raw)
    if found is None:
        log.warning("unmapped category %r -> %s", raw, UNKNOWN_CATEGORY)
        return UNKNOWN_CATEGORY
    return found


# --------------------------------------------------------------------
# Article IO and splitting
# --------------------------------------------------------------------

def read_articles(path: str | Path) -> list[Article]:
    articles = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                articles.append(Article.from_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError, TypeError) as exc:
                raise CorpusFormatError(str(exc), line_no) from exc
    return articles


def write_articles(articles: Iterable[Article], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for art in articles:
            fh.write(json.dumps(art.to_dict(), ensure_ascii=False) + "\n")


def split_articles(
    articles: list[Article],
    ratios: tuple[float, float, float],
    seed: int,
) -> tuple[list[Article], list[Article], list[Article]]:
    """Deterministically split articles into train/dev/test.

    The split is at article granularity: after a seeded shuffle, dev and
    test take ``floor(n * ratio)`` articles each and the remainder goes
    to train.
    """
    if not articles:
        raise ValueError("cannot split an empty article list")
    if len(ratios) != 3 or min(ratios) <= 0:
        raise ValueError("ratios must be three positive fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    _, dev_r, test_r = ratios
    order = list(articles)
    random.Random(seed).shuffle(order)
    n = len(order)
    n_dev = int(n * dev_r)
    n_test = int(n * test_r)
    n_train = n - n_dev - n_test
    return (
        order[:n_train],
        order[n_train:n_train + n_dev],
        order[n_train + n_dev:],
    )
