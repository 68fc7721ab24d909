"""Word-vector loading and exact cosine nearest-neighbor queries.

Vectors come from the standard text format: a ``count dim`` header line
followed by one ``token v1 ... v_dim`` row per word. The index is
immutable after load and safe to share across threads.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class VectorFormatError(ValueError):
    """Malformed vector file; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class OovTokenError(KeyError):
    """Query token is not in the vocabulary."""

    def __init__(self, token: str):
        super().__init__(token)
        self.token = token

    def __str__(self) -> str:
        return f"token not in vocabulary: {self.token!r}"


@dataclass(frozen=True)
class Neighbor:
    token: str
    similarity: float


class EmbeddingIndex:
    """Immutable vocabulary -> vector map with precomputed norms."""

    def __init__(self, tokens: Sequence[str], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2-dimensional")
        if len(tokens) != matrix.shape[0]:
            raise ValueError("token count does not match matrix rows")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")
        if matrix.size and not np.isfinite(matrix).all():
            raise ValueError("matrix contains non-finite entries")
        norms = np.linalg.norm(matrix, axis=1)
        if matrix.size and (norms == 0.0).any():
            bad = tokens[int(np.argmax(norms == 0.0))]
            raise ValueError(f"zero vector for token {bad!r}")
        matrix.setflags(write=False)
        self._tokens: tuple[str, ...] = tuple(tokens)
        self._matrix = matrix
        self._norms = norms
        self._row: dict[str, int] = {t: i for i, t in enumerate(self._tokens)}
        # Sortable string array for deterministic lexicographic tie-breaks.
        self._vocab_array = np.array(self._tokens, dtype=str) if tokens else \
            np.empty(0, dtype=str)
        self._normalized: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    @property
    def vocab(self) -> tuple[str, ...]:
        return self._tokens

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._row

    def vector(self, token: str) -> np.ndarray:
        try:
            return self._matrix[self._row[token]]
        except KeyError:
            raise OovTokenError(token) from None

    def _normalized_matrix(self) -> np.ndarray:
        # Lazily cached; rankings must match the norm-dividing scan exactly.
        if self._normalized is None:
            normalized = self._matrix / self._norms[:, None]
            normalized.setflags(write=False)
            self._normalized = normalized
        return self._normalized


def cosine(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """dot(a, b) / (|a| * |b|); raises on zero-norm or mismatched input."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(np.dot(va, vb) / (na * nb))


def k_nearest(
    index: EmbeddingIndex,
    token: str,
    k: int,
    prenormalized: bool = False,
) -> list[Neighbor]:
    """Top-k vocabulary entries by cosine similarity to ``token``.

    The query token itself is excluded. For ranking, similarities are
    quantized to 12 decimals and ties break lexicographically by token,
    so rows with mathematically equal cosines (duplicate or scaled
    vectors) order identically no matter which code path or BLAS
    produced the last ulp. ``prenormalized=True`` switches to the cached
    unit-row matrix; both paths are exact full scans and must return
    identical rankings.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if token not in index:
        raise OovTokenError(token)
    row = index._row[token]
    query = index._matrix[row]
    if prenormalized:
        sims = index._normalized_matrix() @ (query / index._norms[row])
    else:
        sims = (index._matrix @ query) / (index._norms * index._norms[row])
    # Primary key: quantized similarity descending; secondary: token.
    order = np.lexsort((index._vocab_array, -np.round(sims, 12)))
    out: list[Neighbor] = []
    for idx in order:
        if idx == row:
            continue
        out.append(Neighbor(index._tokens[idx], float(sims[idx])))
        if len(out) == k:
            break
    return out


def load_vectors(path: str | Path) -> EmbeddingIndex:
    """Load a ``count dim`` header text vector file into an index.

    Duplicate tokens keep their first occurrence (with a warning); a row
    count that disagrees with the header, a wrong component count, or a
    non-numeric component is a load error with its line number.
    """
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    seen: dict[str, int] = {}
    duplicates = 0
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise VectorFormatError("header must be '<count> <dim>'", 1)
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise VectorFormatError("header must be '<count> <dim>'", 1) from None
        if dim < 1 or count < 0:
            raise VectorFormatError("header counts out of range", 1)
        data_lines = 0
        for line_no, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            data_lines += 1
            fields = line.split(" ")
            # Tolerate a trailing space, as some writers emit one.
            if fields and fields[-1] == "":
                fields.pop()
            if len(fields) != dim + 1:
                raise VectorFormatError(
                    f"expected 1 token + {dim} components, got {len(fields)}",
                    line_no)
            tok = fields[0]
            try:
                vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            except ValueError:
                raise VectorFormatError("non-numeric vector component", line_no) from None
            if not np.isfinite(vec).all():
                raise VectorFormatError("non-finite vector component", line_no)
            if tok in seen:
                duplicates += 1
                continue
            seen[tok] = len(tokens)
            tokens.append(tok)
            rows.append(vec)
    if data_lines != count:
        raise VectorFormatError(
            f"header declares {count} rows but file has {data_lines}", 1)
    if duplicates:
        log.warning("%d duplicate token(s) ignored (first occurrence kept)",
                    duplicates)
    matrix = np.vstack(rows) if rows else np.empty((0, dim), dtype=np.float64)
    return EmbeddingIndex(tokens, matrix)


def save_vectors(index: EmbeddingIndex, path: str | Path) -> None:
    """Write the index back out in the text vector format, losslessly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(index)} {index.dim}\n")
        for token, row in zip(index.vocab, index.matrix):
            comps = " ".join(repr(float(v)) for v in row)
            fh.write(f"{token} {comps}\n")


def build_index(pairs: Iterable[tuple[str, Sequence[float]]]) -> EmbeddingIndex:
    """Convenience constructor from (token, vector) pairs."""
    toks, vecs = [], []
    for tok, vec in pairs:
        toks.append(tok)
        vecs.append(np.asarray(vec, dtype=np.float64))
    matrix = np.vstack(vecs) if vecs else np.empty((0, 1))
    return EmbeddingIndex(toks, matrix)
