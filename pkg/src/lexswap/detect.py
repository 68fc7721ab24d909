"""Detection baseline: hashed character n-grams + logistic regression.

The featurizer hashes every character n-gram (n in a configurable
range) into 2^18 buckets with 32-bit FNV-1a over the n-gram's UTF-8
bytes, so features are stable across runs and platforms. The trainer is
plain seeded SGD on the softmax cross-entropy of a two-class linear
model; everything is deterministic given its seed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .datagen import DatasetRecord, LABEL_HUMAN, LABEL_MACHINE

NUM_BUCKETS = 1 << 18

_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193
_MASK32 = 0xFFFFFFFF

MODEL_FORMAT = "lexswap-linear@1"

CLAIM_TRUE = "true"
CLAIM_FAKE = "fake"

SETTING_BASELINE = "baseline"
SETTING_ZERO_SHOT = "zero_shot"
SETTING_AUGMENT = "augment"


@dataclass(frozen=True)
class ClaimRecord:
    text: str
    label: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("claim text must be non-empty")
        if self.label not in (CLAIM_TRUE, CLAIM_FAKE):
            raise ValueError(f"claim label must be true/fake, got {self.label!r}")


class ClaimFormatError(ValueError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def load_claims(path: str | Path) -> list[ClaimRecord]:
    """Read ``label<TAB>text`` claims with labels in {true, fake}."""
    claims: list[ClaimRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2 or not parts[1]:
                raise ClaimFormatError("expected label<TAB>text", line_no)
            label, text = parts
            if label not in (CLAIM_TRUE, CLAIM_FAKE):
                raise ClaimFormatError(f"unknown label {label!r}", line_no)
            claims.append(ClaimRecord(text=text, label=label))
    return claims


# --------------------------------------------------------------------
# Featurization
# --------------------------------------------------------------------

def _fnv1a32(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK32
    return h


def featurize(text: str, n_range: tuple[int, int] = (2, 4)) -> dict[int, int]:
    """Hashed character n-gram counts for n in ``n_range`` (inclusive)."""
    low, high = n_range
    if not 1 <= low <= high <= 6:
        raise ValueError("n_range must satisfy 1 <= low <= high <= 6")
    counts: dict[int, int] = {}
    for n in range(low, high + 1):
        for i in range(len(text) - n + 1):
            bucket = _fnv1a32(text[i:i + n].encode("utf-8")) % NUM_BUCKETS
            counts[bucket] = counts.get(bucket, 0) + 1
    return counts


# --------------------------------------------------------------------
# Linear model
# --------------------------------------------------------------------

@dataclass
class LinearModel:
    classes: tuple[str, str]
    weights: np.ndarray          # shape (2, NUM_BUCKETS)
    bias: np.ndarray             # shape (2,)
    n_range: tuple[int, int]
    epochs: int
    learning_rate: float
    seed: int
    loss_history: list[float] = field(default_factory=list)

    def scores(self, features: dict[int, int]) -> np.ndarray:
        if not features:
            return self.bias.copy()
        idx = np.fromiter(features.keys(), dtype=np.int64, count=len(features))
        val = np.fromiter(features.values(), dtype=np.float64, count=len(features))
        return self.weights[:, idx] @ val + self.bias

    def predict(self, text: str) -> str:
        return self.classes[int(np.argmax(self.scores(featurize(text, self.n_range))))]

    def predict_many(self, texts: Iterable[str]) -> list[str]:
        return [self.predict(t) for t in texts]


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def example_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    features: dict[int, int],
    class_index: int,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-entropy loss and gradients for a single example.

    Returns (loss, grad_w, grad_b) where grad_w has one column per
    feature present, in the iteration order of ``features``.
    """
    idx = np.fromiter(features.keys(), dtype=np.int64, count=len(features))
    val = np.fromiter(features.values(), dtype=np.float64, count=len(features))
    scores = weights[:, idx] @ val + bias if len(idx) else bias.copy()
    probs = _softmax(scores)
    loss = -float(np.log(max(probs[class_index], 1e-300)))
    err = probs.copy()
    err[class_index] -= 1.0
    grad_w = np.outer(err, val)
    return loss, grad_w, err


def _dataset_loss(weights, bias, featurized, targets) -> float:
    total = 0.0
    for features, target in zip(featurized, targets):
        idx = np.fromiter(features.keys(), dtype=np.int64, count=len(features))
        val = np.fromiter(features.values(), dtype=np.float64, count=len(features))
        scores = weights[:, idx] @ val + bias if len(idx) else bias.copy()
        probs = _softmax(scores)
        total += -float(np.log(max(probs[target], 1e-300)))
    return total / len(featurized)


def train_linear(
    examples: Sequence[tuple[str, str]],
    epochs: int = 10,
    learning_rate: float = 0.1,
    seed: int = 0,
    n_range: tuple[int, int] = (2, 4),
) -> LinearModel:
    """Train the two-class baseline with seeded SGD.

    Examples are (text, label) pairs covering exactly two labels.
    Shuffling is reseeded per run from ``seed``; the end-of-epoch mean
    loss is recorded in ``loss_history``.
    """
    if len(examples) < 2:
        raise ValueError("need at least two training examples")
    classes = tuple(sorted({label for _, label in examples}))
    if len(classes) != 2:
        raise ValueError(f"need exactly two classes, got {classes}")
    class_index = {c: i for i, c in enumerate(classes)}
    featurized = [featurize(text, n_range) for text, _ in examples]
    targets = [class_index[label] for _, label in examples]

    weights = np.zeros((2, NUM_BUCKETS), dtype=np.float64)
    bias = np.zeros(2, dtype=np.float64)
    rng = random.Random(seed)
    order = list(range(len(examples)))
    history: list[float] = []
    for _ in range(epochs):
        rng.shuffle(order)
        for i in order:
            features = featurized[i]
            if not features:
                continue
            idx = np.fromiter(features.keys(), dtype=np.int64, count=len(features))
            _, grad_w, grad_b = example_loss_and_grad(
                weights, bias, features, targets[i])
            weights[:, idx] -= learning_rate * grad_w
            bias -= learning_rate * grad_b
        history.append(_dataset_loss(weights, bias, featurized, targets))
    return LinearModel(
        classes=classes, weights=weights, bias=bias, n_range=n_range,
        epochs=epochs, learning_rate=learning_rate, seed=seed,
        loss_history=history)


def save_model(model: LinearModel, path: str | Path) -> None:
    """Versioned JSON dump keeping only the nonzero weights."""
    sparse: dict[str, dict[str, float]] = {}
    for c, cls in enumerate(model.classes):
        nz = np.nonzero(model.weights[c])[0]
        sparse[cls] = {str(int(i)): float(model.weights[c, i]) for i in nz}
    payload = {
        "format": MODEL_FORMAT,
        "classes": list(model.classes),
        "num_buckets": NUM_BUCKETS,
        "n_range": list(model.n_range),
        "epochs": model.epochs,
        "learning_rate": model.learning_rate,
        "seed": model.seed,
        "loss_history": model.loss_history,
        "bias": [float(b) for b in model.bias],
        "weights": sparse,
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: str | Path) -> LinearModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {payload.get('format')!r}")
    classes = tuple(payload["classes"])
    weights = np.zeros((2, NUM_BUCKETS), dtype=np.float64)
    for c, cls in enumerate(classes):
        for key, value in payload["weights"][cls].items():
            weights[c, int(key)] = value
    return LinearModel(
        classes=classes,
        weights=weights,
        bias=np.array(payload["bias"], dtype=np.float64),
        n_range=tuple(payload["n_range"]),
        epochs=payload["epochs"],
        learning_rate=payload["learning_rate"],
        seed=payload["seed"],
        loss_history=list(payload.get("loss_history", [])),
    )


# --------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------

@dataclass
class EvalReport:
    accuracy: float
    macro_f1: float
    per_class: dict[str, dict[str, float]]
    confusion: dict[str, dict[str, int]]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class": {c: dict(v) for c, v in sorted(self.per_class.items())},
            "confusion": {g: dict(sorted(row.items()))
                          for g, row in sorted(self.confusion.items())},
        }


def evaluate(
    predictions: Sequence[str],
    golds: Sequence[str],
    classes: Sequence[str] | None = None,
) -> EvalReport:
    """Accuracy, per-class precision/recall/F1, and macro F1.

    ``classes`` declares the label set entering the macro average; by
    default it is every label observed in either list. A declared class
    absent from both lists contributes an F1 of 0.
    """
    if len(predictions) != len(golds):
        raise ValueError("predictions and golds must be aligned")
    if not golds:
        raise ValueError("nothing to evaluate")
    declared = sorted(classes) if classes is not None else \
        sorted(set(predictions) | set(golds))
    confusion: dict[str, dict[str, int]] = {}
    for pred, gold in zip(predictions, golds):
        confusion.setdefault(gold, {})
        confusion[gold][pred] = confusion[gold].get(pred, 0) + 1
    accuracy = sum(p == g for p, g in zip(predictions, golds)) / len(golds)
    per_class: dict[str, dict[str, float]] = {}
    f1s = []
    for cls in declared:
        tp = confusion.get(cls, {}).get(cls, 0)
        fp = sum(confusion.get(g, {}).get(cls, 0)
                 for g in confusion if g != cls)
        fn = sum(n for p, n in confusion.get(cls, {}).items() if p != cls)
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) \
            if precision + recall else 0.0
        per_class[cls] = {
            "precision": precision, "recall": recall, "f1": f1,
            "support": float(support),
        }
        f1s.append(f1)
    return EvalReport(
        accuracy=accuracy,
        macro_f1=sum(f1s) / len(f1s),
        per_class=per_class,
        confusion=confusion,
    )


# --------------------------------------------------------------------
# Training-set composition
# --------------------------------------------------------------------

def compose_training(
    setting: str,
    gold_train: Sequence[ClaimRecord] | None,
    generated: Sequence[DatasetRecord],
    factor: int = 1,
    invert_mapping: bool = False,
) -> list[tuple[str, str]]:
    """Assemble (text, label) training data for one experimental setting.

    ``baseline`` uses the gold claims only. ``zero_shot`` uses only the
    generated data, mapping machine->fake and human->true (the mapping
    can be inverted for ablations). ``augment`` unions gold with the
    generated data repeated ``factor`` times; pass a larger generated
    pool to get more unique examples instead of duplicates.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    fake_source = LABEL_HUMAN if invert_mapping else LABEL_MACHINE
    mapped = [(r.text, CLAIM_FAKE if r.label == fake_source else CLAIM_TRUE)
              for r in generated]
    if setting == SETTING_BASELINE:
        if gold_train is None:
            raise ValueError("baseline requires gold training claims")
        return [(c.text, c.label) for c in gold_train]
    if setting == SETTING_ZERO_SHOT:
        if gold_train is not None:
            raise ValueError("zero_shot must not receive gold training claims")
        return mapped
    if setting == SETTING_AUGMENT:
        if gold_train is None:
            raise ValueError("augment requires gold training claims")
        return [(c.text, c.label) for c in gold_train] + mapped * factor
    raise ValueError(f"unknown setting {setting!r}")
