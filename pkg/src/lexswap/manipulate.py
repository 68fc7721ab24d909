"""Substitution engine for generating manipulated sentence variants.

Tokens whose POS tag is targeted get swapped for embedding neighbors,
randomized (digit numbers), or deleted (negative particles). A
character-level similarity ratio screens out neighbors that are just
inflected forms of the original word, so every swap introduces a
genuinely different lemma.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from random import Random
from typing import Iterable, Sequence

from .corpus import Sentence, Token
from .embeddings import EmbeddingIndex, OovTokenError, k_nearest
from .seeds import derived_rng

NEG_PART = "NEG_PART"
N_NUM = "N_NUM"

DEFAULT_TARGET_POS = frozenset(
    {"N_PROP", "N_NUM", "ADJ", "ADJ_COMP", "ADJ_NUM", "NEG_PART"})

EMBEDDING_SWAP = "embedding_swap"
NUMBER_RANDOMIZE = "number_randomize"
NEGATION_DELETE = "negation_delete"

ASCII_DIGITS = "0123456789"
ARABIC_INDIC_DIGITS = "٠١٢٣٤٥٦٧٨٩"


class NotANumberError(ValueError):
    """Token is not a plain digit string; use the embedding path instead."""


@dataclass(frozen=True)
class ManipulationConfig:
    target_pos: frozenset[str] = DEFAULT_TARGET_POS
    ratio_threshold: float = 0.5
    candidates_per_token: int = 5
    number_variants: int = 3
    max_variants_per_sentence: int = 75
    neighbor_scan_limit: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio_threshold <= 1.0:
            raise ValueError("ratio_threshold must be in (0, 1]")
        for name in ("candidates_per_token", "number_variants",
                     "max_variants_per_sentence", "neighbor_scan_limit"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        object.__setattr__(self, "target_pos", frozenset(self.target_pos))


@dataclass(frozen=True)
class SubstitutionCandidate:
    token: str
    similarity: float
    rank: int       # 0-based position in the neighbor list; equals the
                    # number of neighbors inspected before acceptance
    ratio: float


@dataclass(frozen=True)
class SubstitutionScan:
    candidates: tuple[SubstitutionCandidate, ...]
    oov: bool = False


@dataclass(frozen=True)
class ManipulationRecord:
    token_index: int
    original: str
    substitute: str     # empty string means the token was deleted
    pos: str
    kind: str
    rank: int | None = None
    ratio: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (EMBEDDING_SWAP, NUMBER_RANDOMIZE, NEGATION_DELETE):
            raise ValueError(f"unknown manipulation kind {self.kind!r}")
        if (self.kind == NEGATION_DELETE) != (self.substitute == ""):
            raise ValueError("empty substitute iff kind is negation_delete")
        if self.kind == EMBEDDING_SWAP and (self.rank is None or self.ratio is None):
            raise ValueError("embedding_swap records need rank and ratio")

    def to_dict(self) -> dict:
        return {
            "token_index": self.token_index,
            "original": self.original,
            "substitute": self.substitute,
            "pos": self.pos,
            "kind": self.kind,
            "rank": self.rank,
            "ratio": self.ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ManipulationRecord":
        return cls(
            token_index=d["token_index"],
            original=d["original"],
            substitute=d["substitute"],
            pos=d["pos"],
            kind=d["kind"],
            rank=d.get("rank"),
            ratio=d.get("ratio"),
        )


@dataclass(frozen=True)
class ManipulatedSentence:
    source_id: str
    tokens: tuple[Token, ...]
    records: tuple[ManipulationRecord, ...]

    def __post_init__(self) -> None:
        if not self.records:
            raise ValueError("a manipulated sentence needs at least one record")
        if not self.tokens:
            raise ValueError("a manipulated sentence cannot be empty")

    @property
    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)


# --------------------------------------------------------------------
# Character similarity ratio
# --------------------------------------------------------------------

def _longest_common_block(a: str, alo: int, ahi: int,
                          b: str, blo: int, bhi: int) -> tuple[int, int, int]:
    """Longest common contiguous substring within the given windows.

    Among equally long blocks, the one starting earliest in ``a`` (then
    earliest in ``b``) wins, matching the reference behavior of the
    classic gestalt pattern matcher.
    """
    best_i, best_j, best_size = alo, blo, 0
    j2len: dict[int, int] = {}
    for i in range(alo, ahi):
        ci = a[i]
        new: dict[int, int] = {}
        for j in range(blo, bhi):
            if b[j] == ci:
                length = j2len.get(j - 1, 0) + 1
                new[j] = length
                if length > best_size:
                    best_i, best_j, best_size = i - length + 1, j - length + 1, length
        j2len = new
    return best_i, best_j, best_size


def char_ratio(a: str, b: str) -> float:
    """Ratcliff/Obershelp similarity: 2*M / (len(a) + len(b)).

    M sums the lengths of recursively matched longest common contiguous
    substrings. The matcher's earliest-occurrence tie-breaking is order
    sensitive for some inputs, so arguments are put in lexicographic
    order first; that makes the ratio genuinely symmetric. Returns 1.0
    iff the strings are equal.
    """
    if not a or not b:
        raise ValueError("char_ratio requires non-empty strings")
    if b < a:
        a, b = b, a
    matches = 0
    stack = [(0, len(a), 0, len(b))]
    while stack:
        alo, ahi, blo, bhi = stack.pop()
        i, j, size = _longest_common_block(a, alo, ahi, b, blo, bhi)
        if size:
            matches += size
            stack.append((alo, i, blo, j))
            stack.append((i + size, ahi, j + size, bhi))
    return 2.0 * matches / (len(a) + len(b))


# --------------------------------------------------------------------
# Per-token substitution rules
# --------------------------------------------------------------------

def select_substitutes(
    index: EmbeddingIndex,
    token: str,
    config: ManipulationConfig,
) -> SubstitutionScan:
    """Scan embedding neighbors and keep lemma-changing candidates.

    Neighbors are inspected in similarity order up to
    ``neighbor_scan_limit``. A neighbor whose character ratio to the
    original exceeds ``ratio_threshold`` is treated as an inflected form
    of the same word and skipped; up to ``candidates_per_token``
    accepted candidates are returned, each tagged with its 0-based scan
    rank. Out-of-vocabulary tokens yield an empty scan with ``oov`` set.
    """
    try:
        neighbors = k_nearest(index, token, config.neighbor_scan_limit)
    except OovTokenError:
        return SubstitutionScan((), oov=True)
    accepted: list[SubstitutionCandidate] = []
    for position, neighbor in enumerate(neighbors):
        ratio = char_ratio(token, neighbor.token)
        if ratio > config.ratio_threshold:
            continue
        accepted.append(SubstitutionCandidate(
            token=neighbor.token,
            similarity=neighbor.similarity,
            rank=position,
            ratio=ratio,
        ))
        if len(accepted) >= config.candidates_per_token:
            break
    return SubstitutionScan(tuple(accepted))


def digit_script(token: str) -> str | None:
    """Return the digit alphabet the token is written in, if any."""
    if not token:
        return None
    if all(c in ASCII_DIGITS for c in token):
        return ASCII_DIGITS
    if all(c in ARABIC_INDIC_DIGITS for c in token):
        return ARABIC_INDIC_DIGITS
    return None


def substitute_number(token: str, rng: Random) -> str:
    """Replace a digit string with a random one of the same shape.

    The output keeps the original length and digit script, differs from
    the original, and has no leading zero when longer than one digit.
    """
    digits = digit_script(token)
    if digits is None:
        raise NotANumberError(f"not a digit token: {token!r}")
    while True:
        first_pool = digits[1:] if len(token) > 1 else digits
        out = rng.choice(first_pool) + "".join(
            rng.choice(digits) for _ in range(len(token) - 1))
        if out != token:
            return out


def random_numbers(token: str, count: int, rng: Random) -> list[str]:
    """Distinct random replacements for a digit token, capped by what
    the token's length admits."""
    seen: set[str] = set()
    out: list[str] = []
    attempts = 0
    while len(out) < count and attempts < 100 * count:
        attempts += 1
        candidate = substitute_number(token, rng)
        if candidate not in seen:
            seen.add(candidate)
            out.append(candidate)
    return out


def remove_negation(sentence: Sentence, token_index: int) -> ManipulatedSentence:
    """Delete the negative particle at ``token_index``."""
    if not 0 <= token_index < len(sentence.tokens):
        raise IndexError(f"token index {token_index} out of range")
    target = sentence.tokens[token_index]
    if target.pos != NEG_PART:
        raise ValueError(
            f"token at index {token_index} is {target.pos}, not {NEG_PART}")
    if len(sentence.tokens) == 1:
        raise ValueError("deleting the only token would empty the sentence")
    record = ManipulationRecord(
        token_index=token_index,
        original=target.surface,
        substitute="",
        pos=target.pos,
        kind=NEGATION_DELETE,
    )
    tokens = apply_records(sentence.tokens, (record,))
    return ManipulatedSentence(sentence.id, tokens, (record,))


# --------------------------------------------------------------------
# Record application and inversion
# --------------------------------------------------------------------

def apply_records(
    source_tokens: tuple[Token, ...],
    records: Iterable[ManipulationRecord],
) -> tuple[Token, ...]:
    """Apply manipulation records (indexed on the source) to the source."""
    by_index: dict[int, ManipulationRecord] = {}
    for rec in records:
        if rec.token_index in by_index:
            raise ValueError(f"two records for token index {rec.token_index}")
        if not 0 <= rec.token_index < len(source_tokens):
            raise ValueError(f"record index {rec.token_index} out of range")
        if source_tokens[rec.token_index].surface != rec.original:
            raise ValueError(
                f"record original {rec.original!r} does not match source at "
                f"index {rec.token_index}")
        by_index[rec.token_index] = rec
    out: list[Token] = []
    for i, tok in enumerate(source_tokens):
        rec = by_index.get(i)
        if rec is None:
            out.append(tok)
        elif rec.kind == NEGATION_DELETE:
            continue
        else:
            out.append(Token(rec.substitute, tok.pos))
    return tuple(out)


def reconstruct_source_surfaces(
    manipulated_surfaces: Sequence[str],
    records: Iterable[ManipulationRecord],
) -> list[str]:
    """Invert a manipulation at the surface level.

    Given the surfaces of a manipulated sentence and its records
    (indexed on the source), return the source surfaces: swapped tokens
    get their originals back and deleted tokens are re-inserted.
    """
    by_index = {rec.token_index: rec for rec in records}
    n_source = len(manipulated_surfaces) + sum(
        1 for r in by_index.values() if r.kind == NEGATION_DELETE)
    out: list[str] = []
    cursor = 0
    for i in range(n_source):
        rec = by_index.get(i)
        if rec is not None and rec.kind == NEGATION_DELETE:
            out.append(rec.original)
            continue
        surface = manipulated_surfaces[cursor]
        cursor += 1
        out.append(surface if rec is None else rec.original)
    return out


def reconstruct_source_tokens(
    manipulated_tokens: tuple[Token, ...],
    records: Iterable[ManipulationRecord],
) -> tuple[Token, ...]:
    """Invert ``apply_records``: recover the source token sequence."""
    by_index = {rec.token_index: rec for rec in records}
    n_source = len(manipulated_tokens) + sum(
        1 for r in by_index.values() if r.kind == NEGATION_DELETE)
    out: list[Token] = []
    cursor = 0
    for i in range(n_source):
        rec = by_index.get(i)
        if rec is not None and rec.kind == NEGATION_DELETE:
            out.append(Token(rec.original, rec.pos))
            continue
        tok = manipulated_tokens[cursor]
        cursor += 1
        if rec is None:
            out.append(tok)
        else:
            out.append(Token(rec.original, tok.pos))
    return tuple(out)


# --------------------------------------------------------------------
# Variant enumeration
# --------------------------------------------------------------------

def _token_options(
    sentence: Sentence,
    token_index: int,
    token: Token,
    index: EmbeddingIndex,
    config: ManipulationConfig,
) -> list[ManipulationRecord]:
    if token.pos == NEG_PART:
        if len(sentence.tokens) == 1:
            return []
        return [ManipulationRecord(
            token_index=token_index,
            original=token.surface,
            substitute="",
            pos=token.pos,
            kind=NEGATION_DELETE,
        )]
    if token.pos == N_NUM and digit_script(token.surface) is not None:
        rng = derived_rng(config.seed, sentence.id, token_index)
        return [ManipulationRecord(
            token_index=token_index,
            original=token.surface,
            substitute=number,
            pos=token.pos,
            kind=NUMBER_RANDOMIZE,
        ) for number in random_numbers(token.surface, config.number_variants, rng)]
    # Word numerals take the embedding path like the other tags.
    scan = select_substitutes(index, token.surface, config)
    return [ManipulationRecord(
        token_index=token_index,
        original=token.surface,
        substitute=cand.token,
        pos=token.pos,
        kind=EMBEDDING_SWAP,
        rank=cand.rank,
        ratio=cand.ratio,
    ) for cand in scan.candidates]


def generate_variants(
    sentence: Sentence,
    index: EmbeddingIndex,
    config: ManipulationConfig,
) -> list[ManipulatedSentence]:
    """Enumerate manipulated variants of one sentence.

    Every token whose POS is targeted and substitutable contributes an
    option axis (its candidates); the cartesian product is walked with
    token positions left-to-right as the outer axes and candidate rank
    innermost, truncated at ``max_variants_per_sentence``. Tokens with
    no usable option (OOV, nothing below the ratio threshold) are left
    as they are. Randomness is derived from (seed, sentence id), so
    output is identical no matter how sentences are scheduled.
    """
    axes: list[list[ManipulationRecord]] = []
    for i, token in enumerate(sentence.tokens):
        if token.pos not in config.target_pos:
            continue
        options = _token_options(sentence, i, token, index, config)
        if options:
            axes.append(options)
    if not axes:
        return []
    variants: list[ManipulatedSentence] = []
    for combo in itertools.product(*axes):
        if len(variants) >= config.max_variants_per_sentence:
            break
        tokens = apply_records(sentence.tokens, combo)
        if not tokens or tokens == sentence.tokens:
            continue
        variants.append(ManipulatedSentence(sentence.id, tokens, tuple(combo)))
    return variants
