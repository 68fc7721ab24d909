"""Study sampling, Cohen's kappa, and veracity-change statistics.

Stage 1 shows single sentences (human vs. machine judgment); stage 2
shows manipulated/original pairs (fake vs. true judgment) for the
machine samples only. Annotators may also submit ``skip``; skipped
items never enter the agreement computation and are reported
separately.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..datagen import DatasetRecord, LABEL_HUMAN, LABEL_MACHINE
from ..manipulate import reconstruct_source_surfaces

STAGE1_VALUES = ("human", "machine")
STAGE2_VALUES = ("true", "fake")
SKIP_VALUE = "skip"


def validate_label_value(stage: int, value: str) -> None:
    domain = STAGE1_VALUES if stage == 1 else STAGE2_VALUES
    if value != SKIP_VALUE and value not in domain:
        raise ValueError(
            f"value {value!r} not allowed at stage {stage}; "
            f"expected one of {domain + (SKIP_VALUE,)}")


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    stage: int
    shown_text: str
    gold_origin: str
    pair_original: str | None = None
    pos_of_manipulation: str | None = None

    def __post_init__(self) -> None:
        if self.stage not in (1, 2):
            raise ValueError(f"stage must be 1 or 2, got {self.stage}")
        if self.gold_origin not in (LABEL_HUMAN, LABEL_MACHINE):
            raise ValueError(f"bad gold_origin {self.gold_origin!r}")
        if self.stage == 2:
            if self.pair_original is None:
                raise ValueError("stage-2 tasks need pair_original")
            if self.gold_origin != LABEL_MACHINE:
                raise ValueError("stage-2 tasks are machine samples")

    def public_dict(self) -> dict:
        """Payload served to annotators; never includes the gold origin."""
        payload = {
            "task_id": self.task_id,
            "stage": self.stage,
            "shown_text": self.shown_text,
        }
        if self.stage == 2:
            payload["pair_original"] = self.pair_original
        return payload

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "stage": self.stage,
            "shown_text": self.shown_text,
            "pair_original": self.pair_original,
            "pos_of_manipulation": self.pos_of_manipulation,
            "gold_origin": self.gold_origin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotationTask":
        return cls(
            task_id=d["task_id"],
            stage=d["stage"],
            shown_text=d["shown_text"],
            gold_origin=d["gold_origin"],
            pair_original=d.get("pair_original"),
            pos_of_manipulation=d.get("pos_of_manipulation"),
        )


@dataclass(frozen=True)
class AnnotationLabel:
    task_id: str
    annotator_id: str
    stage: int
    value: str
    timestamp: str


def sample_study(
    records: Sequence[DatasetRecord],
    n_human: int,
    n_machine: int,
    seed: int,
) -> list[AnnotationTask]:
    """Draw the study sample and lay out both stages.

    Stage-1 tasks cover all sampled records in one seeded shuffle, so
    presentation order carries no human/machine signal. Stage-2 tasks
    repeat the machine samples (in stage-1 order), pairing each
    manipulated text with its source text reconstructed from the
    manipulation records.
    """
    humans = [r for r in records if r.label == LABEL_HUMAN]
    machines = [r for r in records if r.label == LABEL_MACHINE]
    if len(humans) < n_human:
        raise ValueError(
            f"need {n_human} human records, dataset has {len(humans)}")
    if len(machines) < n_machine:
        raise ValueError(
            f"need {n_machine} machine records, dataset has {len(machines)}")
    rng = random.Random(seed)
    merged = rng.sample(humans, n_human) + rng.sample(machines, n_machine)
    rng.shuffle(merged)

    tasks: list[AnnotationTask] = []
    for i, record in enumerate(merged):
        tasks.append(AnnotationTask(
            task_id=f"s1-{i:04d}",
            stage=1,
            shown_text=record.text,
            gold_origin=record.label,
        ))
    stage2_sources = [r for r in merged if r.label == LABEL_MACHINE]
    for j, record in enumerate(stage2_sources):
        original = " ".join(reconstruct_source_surfaces(
            record.text.split(" "), record.records))
        tasks.append(AnnotationTask(
            task_id=f"s2-{j:04d}",
            stage=2,
            shown_text=record.text,
            gold_origin=LABEL_MACHINE,
            pair_original=original,
            pos_of_manipulation=record.records[0].pos,
        ))
    return tasks


def write_tasks(tasks: Iterable[AnnotationTask], path: str | Path) -> None:
    payload = {"tasks": [t.to_dict() for t in tasks]}
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8")


def read_tasks(path: str | Path) -> list[AnnotationTask]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [AnnotationTask.from_dict(d) for d in payload["tasks"]]


# --------------------------------------------------------------------
# Agreement
# --------------------------------------------------------------------

def observed_agreement(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    if len(labels_a) != len(labels_b):
        raise ValueError("label lists must be aligned")
    if not labels_a:
        raise ValueError("label lists must be non-empty")
    return sum(a == b for a, b in zip(labels_a, labels_b)) / len(labels_a)


def cohen_kappa(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    """Chance-corrected agreement with per-annotator marginals.

    kappa = (p_o - p_e) / (1 - p_e), where p_e sums the products of the
    two annotators' own label frequencies. When p_e is 1 the marginals
    are degenerate: identical lists get kappa 1, anything else is an
    error.
    """
    if len(labels_a) != len(labels_b):
        raise ValueError("label lists must be aligned")
    n = len(labels_a)
    if n == 0:
        raise ValueError("label lists must be non-empty")
    p_o = observed_agreement(labels_a, labels_b)
    freq_a = Counter(labels_a)
    freq_b = Counter(labels_b)
    p_e = sum((freq_a[lab] / n) * (freq_b[lab] / n)
              for lab in set(freq_a) | set(freq_b))
    if p_e >= 1.0 - 1e-12:
        if list(labels_a) == list(labels_b):
            return 1.0
        raise ValueError("degenerate marginals with disagreeing labels")
    return (p_o - p_e) / (1.0 - p_e)


@dataclass
class StageAgreement:
    n: int
    skipped: int
    observed_agreement: float
    kappa: float
    confusion: dict[str, dict[str, int]]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "skipped": self.skipped,
            "observed_agreement": self.observed_agreement,
            "kappa": self.kappa,
            "confusion": {a: dict(sorted(row.items()))
                          for a, row in sorted(self.confusion.items())},
        }


@dataclass
class AgreementReport:
    annotators: tuple[str, str] | None
    stage1: StageAgreement | None
    stage2: StageAgreement | None

    def to_dict(self) -> dict:
        def stage_dict(stage):
            if stage is None:
                return {"status": "insufficient data"}
            return stage.to_dict()
        return {
            "annotators": list(self.annotators) if self.annotators else None,
            "stage1": stage_dict(self.stage1),
            "stage2": stage_dict(self.stage2),
        }


def _pick_pair(labels: Iterable[AnnotationLabel]) -> tuple[str, str] | None:
    counts = Counter(lab.annotator_id for lab in labels)
    if len(counts) < 2:
        return None
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[0][0], ranked[1][0]


def agreement_report(
    labels: Iterable[AnnotationLabel],
    pair: tuple[str, str] | None = None,
) -> AgreementReport:
    """Two-annotator agreement over the tasks both have labeled.

    ``pair`` names the annotators entering the kappa; when omitted, the
    two most prolific annotators are used. Tasks where either one chose
    ``skip`` are excluded from kappa and counted as skipped.
    """
    labels = list(labels)
    if pair is None:
        pair = _pick_pair(labels)
    if pair is None:
        return AgreementReport(annotators=None, stage1=None, stage2=None)
    a_id, b_id = pair
    stages: dict[int, StageAgreement | None] = {}
    for stage in (1, 2):
        by_task: dict[str, dict[str, str]] = {}
        for lab in labels:
            if lab.stage != stage or lab.annotator_id not in (a_id, b_id):
                continue
            by_task.setdefault(lab.task_id, {})[lab.annotator_id] = lab.value
        pairs = [(vals[a_id], vals[b_id]) for task_id, vals
                 in sorted(by_task.items())
                 if a_id in vals and b_id in vals]
        skipped = sum(1 for va, vb in pairs
                      if SKIP_VALUE in (va, vb))
        usable = [(va, vb) for va, vb in pairs if SKIP_VALUE not in (va, vb)]
        if not usable:
            stages[stage] = None
            continue
        list_a = [va for va, _ in usable]
        list_b = [vb for _, vb in usable]
        confusion: dict[str, dict[str, int]] = {}
        for va, vb in usable:
            confusion.setdefault(va, {})
            confusion[va][vb] = confusion[va].get(vb, 0) + 1
        try:
            kappa = cohen_kappa(list_a, list_b)
        except ValueError:
            stages[stage] = None
            continue
        stages[stage] = StageAgreement(
            n=len(usable),
            skipped=skipped,
            observed_agreement=observed_agreement(list_a, list_b),
            kappa=kappa,
            confusion=confusion,
        )
    return AgreementReport(annotators=pair, stage1=stages[1], stage2=stages[2])


# --------------------------------------------------------------------
# Veracity-change statistics
# --------------------------------------------------------------------

@dataclass
class VeracityStats:
    """Per-POS fraction of stage-2 labels that chose ``fake``."""

    by_pos: dict[str, dict]

    def to_dict(self) -> dict:
        return {"by_pos": {pos: dict(stats)
                           for pos, stats in sorted(self.by_pos.items())}}


def veracity_change_rate(
    items: Iterable[tuple[str | None, str]],
) -> VeracityStats:
    """Aggregate (pos, stage-2 value) pairs into per-POS fake rates.

    Every label must be joined to a POS; skip labels are excluded from
    the fraction. POS classes with no usable labels are omitted.
    """
    fake: dict[str, int] = {}
    total: dict[str, int] = {}
    for pos, value in items:
        if pos is None:
            raise ValueError("stage-2 label not joined to a POS")
        if value == SKIP_VALUE:
            continue
        if value not in STAGE2_VALUES:
            raise ValueError(f"bad stage-2 value {value!r}")
        total[pos] = total.get(pos, 0) + 1
        if value == "fake":
            fake[pos] = fake.get(pos, 0) + 1
    by_pos = {
        pos: {"fake_fraction": fake.get(pos, 0) / n, "labels": n}
        for pos, n in total.items()
    }
    return VeracityStats(by_pos=by_pos)
