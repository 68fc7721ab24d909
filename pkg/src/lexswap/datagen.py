"""Dataset assembly: balanced human/machine builds, splits, stats, JSONL IO."""

from __future__ import annotations

import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Sentence
from .embeddings import EmbeddingIndex
from .manipulate import (
    ManipulatedSentence,
    ManipulationConfig,
    ManipulationRecord,
    generate_variants,
)
from .seeds import derived_rng

LABEL_HUMAN = "human"
LABEL_MACHINE = "machine"
SPLITS = ("train", "dev", "test")


class DatasetBuildError(ValueError):
    pass


class DatasetIoError(ValueError):
    """Malformed dataset file; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    source_id: str
    text: str
    label: str
    records: tuple[ManipulationRecord, ...]
    split: str

    def __post_init__(self) -> None:
        if self.label not in (LABEL_HUMAN, LABEL_MACHINE):
            raise ValueError(f"bad label {self.label!r}")
        if self.split not in SPLITS:
            raise ValueError(f"bad split {self.split!r}")
        if (self.label == LABEL_HUMAN) != (not self.records):
            raise ValueError("human records carry no manipulation records")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_id": self.source_id,
            "text": self.text,
            "label": self.label,
            "records": [r.to_dict() for r in self.records],
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetRecord":
        return cls(
            id=d["id"],
            source_id=d["source_id"],
            text=d["text"],
            label=d["label"],
            records=tuple(ManipulationRecord.from_dict(r)
                          for r in d.get("records", [])),
            split=d["split"],
        )


@dataclass
class DatasetStats:
    pos_counts: dict[str, int] = field(default_factory=dict)
    rank_avg: dict[str, float] = field(default_factory=dict)
    rank_median: dict[str, float] = field(default_factory=dict)
    label_counts: dict[str, int] = field(default_factory=dict)
    split_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pos_counts": dict(sorted(self.pos_counts.items())),
            "rank_avg": dict(sorted(self.rank_avg.items())),
            "rank_median": dict(sorted(self.rank_median.items())),
            "label_counts": dict(sorted(self.label_counts.items())),
            "split_counts": dict(sorted(self.split_counts.items())),
        }


# --------------------------------------------------------------------
# Variant generation over whole corpora
# --------------------------------------------------------------------

def variants_by_sentence(
    sentences: Sequence[Sentence],
    index: EmbeddingIndex,
    config: ManipulationConfig,
    workers: int = 1,
) -> list[tuple[Sentence, list[ManipulatedSentence]]]:
    """Generate variants for every sentence, in sorted-id order.

    Generation is pure per sentence, so a thread pool only changes the
    wall clock, never the output.
    """
    ordered = sorted(sentences, key=lambda s: s.id)
    ids = [s.id for s in ordered]
    if len(set(ids)) != len(ids):
        raise DatasetBuildError("duplicate sentence ids in corpus")

    def work(sentence: Sentence) -> list[ManipulatedSentence]:
        return generate_variants(sentence, index, config)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            all_variants = list(pool.map(work, ordered))
    else:
        all_variants = [work(s) for s in ordered]
    return list(zip(ordered, all_variants))


def build_dataset(
    sentences: Sequence[Sentence],
    index: EmbeddingIndex,
    config: ManipulationConfig,
    per_class: int,
    ratios: tuple[float, float, float],
    workers: int = 1,
) -> tuple[list[DatasetRecord], DatasetStats]:
    """Build a balanced human/machine dataset with source-level splits.

    Exactly ``per_class`` human and ``per_class`` machine records are
    produced. At most one variant is sampled per source sentence for the
    machine class, and human sources are drawn from sentences not used
    for the machine class whenever enough remain, so sources rarely
    appear under both labels. Split assignment happens at the source
    level: no source sentence ever straddles two splits.
    """
    if per_class < 1:
        raise DatasetBuildError("per_class must be >= 1")
    _check_ratios(ratios)
    if len(sentences) < per_class:
        raise DatasetBuildError(
            f"need {per_class} human sources, corpus has {len(sentences)}")

    generated = variants_by_sentence(sentences, index, config, workers=workers)
    picked: list[tuple[Sentence, ManipulatedSentence]] = []
    for sentence, variants in generated:
        if not variants:
            continue
        rng = derived_rng(config.seed, "pick", sentence.id)
        picked.append((sentence, rng.choice(variants)))
    if len(picked) < per_class:
        raise DatasetBuildError(
            f"need {per_class} machine variants but only {len(picked)} source "
            f"sentences produced any (short by {per_class - len(picked)})")

    machine_rng = derived_rng(config.seed, "machine")
    machine = sorted(machine_rng.sample(picked, per_class),
                     key=lambda pair: pair[0].id)
    machine_ids = {s.id for s, _ in machine}

    by_id = {s.id: s for s in sentences}
    unused = [s for s in sorted(sentences, key=lambda s: s.id)
              if s.id not in machine_ids]
    human_rng = derived_rng(config.seed, "human")
    if len(unused) >= per_class:
        humans = sorted(human_rng.sample(unused, per_class), key=lambda s: s.id)
    else:
        topup = human_rng.sample(sorted(machine_ids), per_class - len(unused))
        humans = sorted(unused + [by_id[sid] for sid in topup],
                        key=lambda s: s.id)

    source_ids = sorted({s.id for s in humans} | machine_ids)
    split_of = assign_splits(source_ids, ratios, derived_rng(config.seed, "split"))

    records: list[DatasetRecord] = []
    for s in humans:
        records.append(DatasetRecord(
            id=f"{s.id}/h", source_id=s.id, text=s.text,
            label=LABEL_HUMAN, records=(), split=split_of[s.id]))
    for s, variant in machine:
        records.append(DatasetRecord(
            id=f"{s.id}/m", source_id=s.id, text=variant.text,
            label=LABEL_MACHINE, records=variant.records,
            split=split_of[s.id]))
    records.sort(key=lambda r: (r.source_id, r.id))
    return records, pos_stats(records)


def exhaustive_dataset(
    sentences: Sequence[Sentence],
    index: EmbeddingIndex,
    config: ManipulationConfig,
    ratios: tuple[float, float, float],
    workers: int = 1,
) -> tuple[list[DatasetRecord], DatasetStats]:
    """Keep every generated variant instead of sampling one per source.

    Each source sentence contributes one human record plus all of its
    variants (capped per sentence by the config); splits stay at source
    granularity.
    """
    _check_ratios(ratios)
    if not sentences:
        raise DatasetBuildError("empty corpus")
    generated = variants_by_sentence(sentences, index, config, workers=workers)
    source_ids = sorted(s.id for s, _ in generated)
    split_of = assign_splits(source_ids, ratios, derived_rng(config.seed, "split"))
    records: list[DatasetRecord] = []
    for sentence, variants in generated:
        split = split_of[sentence.id]
        records.append(DatasetRecord(
            id=f"{sentence.id}/h", source_id=sentence.id, text=sentence.text,
            label=LABEL_HUMAN, records=(), split=split))
        for k, variant in enumerate(variants):
            records.append(DatasetRecord(
                id=f"{sentence.id}/m{k:04d}", source_id=sentence.id,
                text=variant.text, label=LABEL_MACHINE,
                records=variant.records, split=split))
    records.sort(key=lambda r: (r.source_id, r.id))
    return records, pos_stats(records)


def _check_ratios(ratios: tuple[float, float, float]) -> None:
    if len(ratios) != 3 or min(ratios) <= 0:
        raise DatasetBuildError("ratios must be three positive fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetBuildError(f"ratios must sum to 1, got {sum(ratios)}")


def assign_splits(source_ids: Sequence[str], ratios, rng) -> dict[str, str]:
    """Shuffle sources and slice: dev/test get their floors, train the rest."""
    order = list(source_ids)
    rng.shuffle(order)
    n = len(order)
    n_dev = int(n * ratios[1])
    n_test = int(n * ratios[2])
    n_train = n - n_dev - n_test
    split_of: dict[str, str] = {}
    for i, sid in enumerate(order):
        if i < n_train:
            split_of[sid] = "train"
        elif i < n_train + n_dev:
            split_of[sid] = "dev"
        else:
            split_of[sid] = "test"
    return split_of


# --------------------------------------------------------------------
# Statistics
# --------------------------------------------------------------------

def pos_stats(records: Iterable[DatasetRecord]) -> DatasetStats:
    """Per-POS manipulation counts plus excluded-neighbor statistics.

    A record's rank is the number of neighbors skipped before its
    substitute was accepted, so the mean/median rank per POS describes
    how aggressively the ratio screen filtered that class. Deletions and
    digit randomizations carry no rank and contribute to counts only.
    """
    stats = DatasetStats()
    ranks: dict[str, list[int]] = {}
    for record in records:
        stats.label_counts[record.label] = \
            stats.label_counts.get(record.label, 0) + 1
        stats.split_counts[record.split] = \
            stats.split_counts.get(record.split, 0) + 1
        for manip in record.records:
            stats.pos_counts[manip.pos] = stats.pos_counts.get(manip.pos, 0) + 1
            if manip.rank is not None:
                ranks.setdefault(manip.pos, []).append(manip.rank)
    for pos, values in ranks.items():
        stats.rank_avg[pos] = sum(values) / len(values)
        stats.rank_median[pos] = float(statistics.median(values))
    return stats


# --------------------------------------------------------------------
# JSONL IO
# --------------------------------------------------------------------

def write_jsonl(records: Iterable[DatasetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[DatasetRecord]:
    records: list[DatasetRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                records.append(DatasetRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
                raise DatasetIoError(str(exc), line_no) from exc
    return records
