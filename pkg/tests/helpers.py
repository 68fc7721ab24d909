"""Shared fixtures-in-code: mocked neighbor indexes and a toy corpus.

The toy corpus is synthetic but structured: proper nouns and adjectives
come from dedicated syllable alphabets, and the toy embeddings place
each such word right next to a partner word built from a disjoint
alphabet. Substitution therefore injects character patterns that never
occur in human sentences, which gives the detection baseline a
learnable signal at desk scale.
"""

from __future__ import annotations

import math
import random
from pathlib import Path

import numpy as np

from lexswap.corpus import Sentence, Token, write_pos_corpus
from lexswap.embeddings import EmbeddingIndex, build_index, save_vectors

NAME_SYLLABLES = ["ba", "du", "ke", "zo"]
ALIEN_SYLLABLES = ["vi", "gy", "fw", "xp"]
ADJ_SYLLABLES = ["ca", "mo", "re", "su"]
ADJ_ALIEN_SYLLABLES = ["qih", "wyl", "pyg", "xif"]
FILLER_SYLLABLES = ["ta", "ri", "mo", "sa", "le", "no"]


def grouped_index(groups: dict[str, list[str]]) -> EmbeddingIndex:
    """Index whose k-NN answer for each query is exactly its list.

    Each (query, neighbors) group lives in its own 2-D plane of a
    shared space; the query sits at angle 0 and neighbor k at
    (k+1) * 5 degrees, so within-group similarities decrease strictly
    with list position while cross-group similarities are all zero.
    """
    dim = 2 * len(groups)
    pairs = []
    for g, (query, neighbors) in enumerate(groups.items()):
        def vec(angle_deg: float) -> list[float]:
            v = [0.0] * dim
            v[2 * g] = math.cos(math.radians(angle_deg))
            v[2 * g + 1] = math.sin(math.radians(angle_deg))
            return v
        pairs.append((query, vec(0.0)))
        for k, neighbor in enumerate(neighbors):
            pairs.append((neighbor, vec(5.0 * (k + 1))))
    return build_index(pairs)


def _spell(i: int, syllables: list[str], length: int = 4) -> str:
    base = len(syllables)
    out = []
    for _ in range(length):
        out.append(syllables[i % base])
        i //= base
    return "".join(out)


def toy_lexicon() -> dict[str, list[str]]:
    return {
        "names": [_spell(i, NAME_SYLLABLES) for i in range(200)],
        "aliens": [_spell(i, ALIEN_SYLLABLES) for i in range(200)],
        "adjs": [_spell(i, ADJ_SYLLABLES) for i in range(100)],
        "adj_aliens": [_spell(i, ADJ_ALIEN_SYLLABLES) for i in range(100)],
        "fillers": [_spell(i, FILLER_SYLLABLES) for i in range(400)],
    }


def toy_index(seed: int = 7, dim: int = 16) -> EmbeddingIndex:
    """1000-token embedding where each name/adj's top neighbor is its
    alien partner."""
    lex = toy_lexicon()
    rng = np.random.default_rng(seed)
    pairs: list[tuple[str, list[float]]] = []
    for word, partner in list(zip(lex["names"], lex["aliens"])) + \
            list(zip(lex["adjs"], lex["adj_aliens"])):
        u = rng.normal(size=dim)
        u /= np.linalg.norm(u)
        pairs.append((word, list(u)))
        v = u + 0.05 * rng.normal(size=dim)
        pairs.append((partner, list(v)))
    for filler in lex["fillers"]:
        pairs.append((filler, list(rng.normal(size=dim))))
    return build_index(pairs)


def toy_sentences(n: int = 500, seed: int = 11) -> list[Sentence]:
    lex = toy_lexicon()
    rng = random.Random(seed)
    sentences = []
    filler_pos = ["NN", "IV", "PREP", "NOUN"]
    for i in range(n):
        tokens: list[Token] = []
        for j in range(rng.randint(7, 11)):
            tokens.append(Token(rng.choice(lex["fillers"]),
                                filler_pos[j % len(filler_pos)]))
        for _ in range(rng.randint(1, 2)):
            pos = rng.randrange(len(tokens) + 1)
            tokens.insert(pos, Token(rng.choice(lex["names"]), "N_PROP"))
        if rng.random() < 0.5:
            pos = rng.randrange(len(tokens) + 1)
            tokens.insert(pos, Token(str(rng.randint(10, 9999)), "N_NUM"))
        if rng.random() < 0.3:
            pos = rng.randrange(len(tokens) + 1)
            tokens.insert(pos, Token(rng.choice(lex["adjs"]), "ADJ"))
        if rng.random() < 0.2:
            pos = rng.randrange(len(tokens) + 1)
            tokens.insert(pos, Token("lan", "NEG_PART"))
        sentences.append(Sentence(id=f"s{i + 1:06d}", tokens=tuple(tokens)))
    return sentences


def write_toy_inputs(directory: Path, n_sentences: int = 500) -> tuple[Path, Path]:
    """Write the toy POS corpus and vec file; returns their paths."""
    corpus_path = directory / "toy_corpus.tsv"
    vectors_path = directory / "toy_vectors.vec"
    write_pos_corpus(toy_sentences(n_sentences), corpus_path)
    save_vectors(toy_index(), vectors_path)
    return corpus_path, vectors_path
