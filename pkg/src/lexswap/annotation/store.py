"""Append-only JSONL label storage with replacement-by-audit.

Every submitted label is appended as its own line; the current state is
the last entry per (task, annotator, stage). Relabeling therefore keeps
the full history on disk, which makes studies resumable and diffable.
"""

from __future__ import annotations

import json
import os
import threading
import time
from pathlib import Path
from typing import Iterable

from .study import AnnotationLabel, AnnotationTask, validate_label_value


class LabelStoreError(ValueError):
    pass


def _utc_now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


class LabelStore:
    """Single-writer, multi-reader label log bound to a task set."""

    def __init__(self, path: str | Path, tasks: Iterable[AnnotationTask]):
        self._path = Path(path)
        self._tasks = {t.task_id: t for t in tasks}
        self._lock = threading.Lock()
        self._entries: list[dict] = []
        self._current: dict[tuple[str, str, int], dict] = {}
        if self._path.exists():
            for entry in load_label_entries(self._path):
                self._remember(entry)

    def _remember(self, entry: dict) -> None:
        self._entries.append(entry)
        key = (entry["task_id"], entry["annotator_id"], entry["stage"])
        self._current[key] = entry

    @property
    def path(self) -> Path:
        return self._path

    def task(self, task_id: str) -> AnnotationTask:
        try:
            return self._tasks[task_id]
        except KeyError:
            raise LabelStoreError(f"unknown task {task_id!r}") from None

    def tasks(self) -> list[AnnotationTask]:
        return list(self._tasks.values())

    def record_label(self, task_id: str, annotator_id: str, stage: int,
                     value: str) -> dict:
        """Validate and durably append one label; returns an ack.

        A resubmission by the same annotator replaces the prior value;
        the superseded entry stays in the log as the audit trail.
        """
        task = self.task(task_id)
        if stage not in (1, 2):
            raise LabelStoreError(f"stage must be 1 or 2, got {stage!r}")
        if task.stage != stage:
            raise LabelStoreError(
                f"task {task_id} belongs to stage {task.stage}, not {stage}")
        if not annotator_id or not isinstance(annotator_id, str):
            raise LabelStoreError("annotator_id must be a non-empty string")
        try:
            validate_label_value(stage, value)
        except ValueError as exc:
            raise LabelStoreError(str(exc)) from exc
        with self._lock:
            key = (task_id, annotator_id, stage)
            prior = self._current.get(key)
            entry = {
                "seq": len(self._entries) + 1,
                "task_id": task_id,
                "annotator_id": annotator_id,
                "stage": stage,
                "value": value,
                "timestamp": _utc_now(),
                "replaces": prior["seq"] if prior else None,
            }
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._remember(entry)
        return {"status": "stored", "replaced": prior is not None}

    def labels(self) -> list[AnnotationLabel]:
        """Current view: one label per (task, annotator, stage)."""
        with self._lock:
            snapshot = list(self._current.values())
        return [_to_label(e) for e in sorted(snapshot, key=lambda e: e["seq"])]

    def history(self) -> list[dict]:
        with self._lock:
            return [dict(e) for e in self._entries]

    def annotator_counts(self, stage: int) -> dict[str, int]:
        counts: dict[str, int] = {}
        for label in self.labels():
            if label.stage == stage:
                counts[label.annotator_id] = counts.get(label.annotator_id, 0) + 1
        return counts


def _to_label(entry: dict) -> AnnotationLabel:
    return AnnotationLabel(
        task_id=entry["task_id"],
        annotator_id=entry["annotator_id"],
        stage=entry["stage"],
        value=entry["value"],
        timestamp=entry["timestamp"],
    )


def load_label_entries(path: str | Path) -> list[dict]:
    entries: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
                for k in ("task_id", "annotator_id", "stage", "value"):
                    if k not in entry:
                        raise ValueError(f"missing field {k!r}")
            except (json.JSONDecodeError, ValueError) as exc:
                raise LabelStoreError(f"line {line_no}: {exc}") from exc
            entries.append(entry)
    return entries


def merge_label_files(paths: Iterable[str | Path]) -> list[AnnotationLabel]:
    """Merge label logs; later files and later lines win per key."""
    current: dict[tuple[str, str, int], dict] = {}
    order = 0
    for path in paths:
        for entry in load_label_entries(path):
            order += 1
            entry = dict(entry, _order=order)
            current[(entry["task_id"], entry["annotator_id"], entry["stage"])] = entry
    merged = sorted(current.values(), key=lambda e: e["_order"])
    return [_to_label({**e, "timestamp": e.get("timestamp", "")}) for e in merged]
