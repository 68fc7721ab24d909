import math
import random

import numpy as np
import pytest

from lexswap.datagen import DatasetRecord
from lexswap.manipulate import ManipulationRecord
from lexswap.detect import (
    ClaimFormatError,
    ClaimRecord,
    NUM_BUCKETS,
    compose_training,
    evaluate,
    example_loss_and_grad,
    featurize,
    load_claims,
    load_model,
    save_model,
    train_linear,
)


def _fnv_bucket(gram: str) -> int:
    h = 0x811C9DC5
    for byte in gram.encode("utf-8"):
        h = ((h ^ byte) * 0x01000193) & 0xFFFFFFFF
    return h % NUM_BUCKETS


# ---------------------------------------------------------------- featurize

def test_featurize_single_bigram():
    assert featurize("ab", (2, 2)) == {_fnv_bucket("ab"): 1}


def test_featurize_repeated_bigram():
    assert featurize("aaa", (2, 2)) == {_fnv_bucket("aa"): 2}


def test_featurize_totals_law():
    rng = random.Random(3)
    for _ in range(100):
        text = "".join(rng.choice("ابتd e") for _ in range(rng.randint(0, 30)))
        low, high = sorted((rng.randint(1, 4), rng.randint(1, 4)))
        total = sum(featurize(text, (low, high)).values())
        expected = sum(max(0, len(text) - n + 1) for n in range(low, high + 1))
        assert total == expected


def test_featurize_empty_and_bounds():
    assert featurize("", (2, 4)) == {}
    with pytest.raises(ValueError):
        featurize("abc", (0, 2))
    with pytest.raises(ValueError):
        featurize("abc", (3, 2))


def test_featurize_order_sensitive_bigram_witness():
    assert featurize("ab", (2, 2)) != featurize("ba", (2, 2))


def test_featurize_deterministic():
    assert featurize("نص عربي", (2, 4)) == featurize("نص عربي", (2, 4))


# ---------------------------------------------------------------- training

def test_separable_two_points_reach_perfect_training_accuracy():
    examples = [("aaaa", "human"), ("zzzz", "machine")]
    model = train_linear(examples, epochs=20, learning_rate=0.5, seed=0)
    assert [model.predict(t) for t, _ in examples] == ["human", "machine"]


def test_same_seed_identical_weights():
    examples = [("abcd", "x"), ("zzzz", "y"), ("abzz", "x"), ("zzab", "y")]
    m1 = train_linear(examples, epochs=5, learning_rate=0.2, seed=11)
    m2 = train_linear(examples, epochs=5, learning_rate=0.2, seed=11)
    assert np.array_equal(m1.weights, m2.weights)
    assert np.array_equal(m1.bias, m2.bias)


def test_single_class_is_error():
    with pytest.raises(ValueError):
        train_linear([("a", "x"), ("b", "x")])
    with pytest.raises(ValueError):
        train_linear([("a", "x")])


def test_loss_history_non_increasing_with_small_lr():
    rng = random.Random(7)
    examples = [("".join(rng.choice("abc") for _ in range(8)), "one")
                for _ in range(10)]
    examples += [("".join(rng.choice("xyz") for _ in range(8)), "two")
                 for _ in range(10)]
    model = train_linear(examples, epochs=15, learning_rate=0.01, seed=1)
    for earlier, later in zip(model.loss_history, model.loss_history[1:]):
        assert later <= earlier + 1e-9


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    features = {10: 2, 77: 1, 123: 3}
    weights = np.zeros((2, NUM_BUCKETS))
    for idx in features:
        weights[:, idx] = rng.normal(size=2)
    bias = rng.normal(size=2)
    target = 1
    _, grad_w, grad_b = example_loss_and_grad(weights, bias, features, target)
    eps = 1e-6

    def loss_at(w, b):
        idx = np.fromiter(features.keys(), dtype=np.int64)
        val = np.fromiter(features.values(), dtype=np.float64)
        scores = w[:, idx] @ val + b
        shifted = scores - scores.max()
        probs = np.exp(shifted) / np.exp(shifted).sum()
        return -math.log(probs[target])

    for col, idx in enumerate(features):
        for c in range(2):
            w_plus = weights.copy()
            w_plus[c, idx] += eps
            w_minus = weights.copy()
            w_minus[c, idx] -= eps
            fd = (loss_at(w_plus, bias) - loss_at(w_minus, bias)) / (2 * eps)
            assert grad_w[c, col] == pytest.approx(fd, rel=1e-5, abs=1e-8)
    for c in range(2):
        b_plus = bias.copy()
        b_plus[c] += eps
        b_minus = bias.copy()
        b_minus[c] -= eps
        fd = (loss_at(weights, b_plus) - loss_at(weights, b_minus)) / (2 * eps)
        assert grad_b[c] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_model_save_load_round_trip(tmp_path):
    examples = [("abcd", "x"), ("zzzz", "y"), ("abzz", "x"), ("zzab", "y")]
    model = train_linear(examples, epochs=5, learning_rate=0.2, seed=3)
    path = tmp_path / "model.json"
    save_model(model, path)
    again = load_model(path)
    assert again.classes == model.classes
    assert np.array_equal(again.weights, model.weights)
    assert np.array_equal(again.bias, model.bias)
    texts = ["abab", "zzzz", "a", "xyz"]
    assert again.predict_many(texts) == model.predict_many(texts)


# ---------------------------------------------------------------- evaluate

def test_evaluate_all_correct():
    report = evaluate(["h", "m"], ["h", "m"])
    assert report.accuracy == 1.0 and report.macro_f1 == 1.0


def test_evaluate_hand_example():
    report = evaluate(["h", "m", "m", "m"], ["h", "h", "m", "m"])
    assert report.accuracy == pytest.approx(0.75)
    assert report.per_class["h"]["f1"] == pytest.approx(2 / 3)
    assert report.per_class["m"]["f1"] == pytest.approx(0.8)
    assert report.macro_f1 == pytest.approx(0.73333, abs=5e-6)


def test_evaluate_degenerate_predictions():
    report = evaluate(["m", "m", "m", "m"], ["h", "h", "m", "m"])
    assert report.accuracy == pytest.approx(0.5)
    assert report.macro_f1 == pytest.approx(1 / 3)


def test_evaluate_declared_absent_class_counts_zero():
    report = evaluate(["a", "a"], ["a", "a"], classes=["a", "b"])
    assert report.macro_f1 == pytest.approx(0.5)


def test_evaluate_errors():
    with pytest.raises(ValueError):
        evaluate(["a"], ["a", "b"])
    with pytest.raises(ValueError):
        evaluate([], [])


def eval_bruteforce(preds, golds):
    """Independent oracle: recount everything from scratch."""
    classes = sorted(set(preds) | set(golds))
    acc = sum(p == g for p, g in zip(preds, golds)) / len(golds)
    f1s = []
    for c in classes:
        tp = sum(1 for p, g in zip(preds, golds) if p == c and g == c)
        fp = sum(1 for p, g in zip(preds, golds) if p == c and g != c)
        fn = sum(1 for p, g in zip(preds, golds) if p != c and g == c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1s.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return acc, sum(f1s) / len(f1s)


def test_evaluate_matches_bruteforce_oracle():
    rng = random.Random(29)
    for _ in range(1000):
        n = rng.randint(1, 50)
        labels = ["h", "m"] if rng.random() < 0.7 else ["h", "m", "z"]
        preds = [rng.choice(labels) for _ in range(n)]
        golds = [rng.choice(labels) for _ in range(n)]
        acc, macro = eval_bruteforce(preds, golds)
        report = evaluate(preds, golds)
        assert report.accuracy == pytest.approx(acc, abs=1e-9)
        assert report.macro_f1 == pytest.approx(macro, abs=1e-9)


# ---------------------------------------------------------------- claims

def test_load_claims(tmp_path):
    path = tmp_path / "claims.tsv"
    path.write_text("true\tخبر صحيح\nfake\tخبر مزيف\n", encoding="utf-8")
    claims = load_claims(path)
    assert claims == [ClaimRecord("خبر صحيح", "true"),
                      ClaimRecord("خبر مزيف", "fake")]


def test_load_claims_unknown_label(tmp_path):
    path = tmp_path / "claims.tsv"
    path.write_text("true\tok\nmaybe\thmm\n", encoding="utf-8")
    with pytest.raises(ClaimFormatError) as err:
        load_claims(path)
    assert err.value.line_no == 2


def test_load_claims_empty(tmp_path):
    path = tmp_path / "claims.tsv"
    path.write_text("", encoding="utf-8")
    assert load_claims(path) == []


# ---------------------------------------------------------------- compose

def gen_records(n_machine, n_human):
    out = []
    for i in range(n_machine):
        out.append(DatasetRecord(
            id=f"s{i}/m", source_id=f"s{i}", text=f"مزيف {i}",
            label="machine",
            records=(ManipulationRecord(0, "ا", "ب", "N_PROP",
                                        "embedding_swap", rank=0, ratio=0.1),),
            split="train"))
    for i in range(n_human):
        out.append(DatasetRecord(
            id=f"h{i}/h", source_id=f"h{i}", text=f"بشري {i}",
            label="human", records=(), split="train"))
    return out


def gold_claims(n):
    return [ClaimRecord(f"claim {i}", "true" if i % 2 else "fake")
            for i in range(n)]


def test_compose_baseline():
    composed = compose_training("baseline", gold_claims(100), gen_records(5, 5))
    assert len(composed) == 100
    assert all(label in ("true", "fake") for _, label in composed)


def test_compose_zero_shot_maps_labels():
    composed = compose_training("zero_shot", None, gen_records(25, 25))
    assert len(composed) == 50
    labels = [label for _, label in composed]
    assert labels.count("fake") == 25 and labels.count("true") == 25
    for text, label in composed:
        assert (label == "fake") == text.startswith("مزيف")


def test_compose_zero_shot_forbids_gold():
    with pytest.raises(ValueError):
        compose_training("zero_shot", gold_claims(2), gen_records(2, 2))


def test_compose_augment_factor_two():
    composed = compose_training("augment", gold_claims(100),
                                gen_records(20, 20), factor=2)
    assert len(composed) == 100 + 2 * 40


def test_compose_invert_mapping():
    composed = compose_training("zero_shot", None, gen_records(3, 3),
                                invert_mapping=True)
    for text, label in composed:
        assert (label == "true") == text.startswith("مزيف")


def test_compose_requires_gold_for_baseline_and_augment():
    with pytest.raises(ValueError):
        compose_training("baseline", None, gen_records(2, 2))
    with pytest.raises(ValueError):
        compose_training("augment", None, gen_records(2, 2))
    with pytest.raises(ValueError):
        compose_training("nope", gold_claims(1), gen_records(1, 1))
