"""Lexical-substitution toolkit for news text.

Subpackages cover the full pipeline: POS-tagged corpus ingestion
(:mod:`lexswap.corpus`), word-vector nearest neighbors
(:mod:`lexswap.embeddings`), the substitution engine
(:mod:`lexswap.manipulate`), dataset builds (:mod:`lexswap.datagen`),
the two-stage annotation study (:mod:`lexswap.annotation`), and the
detection baseline (:mod:`lexswap.detect`).
"""

__version__ = "0.1.0"
