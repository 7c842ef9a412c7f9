import json

import numpy as np
import pytest

from clogprep.errors import EmptyInput, LengthMismatch
from clogprep.metrics import ConfusionCounts, accuracy, confusion, mcc, write_metrics


def test_confusion_basic():
    c = confusion(["stalled", "flowing"], [0.9, 0.1])
    assert (c.tp, c.tn, c.fp, c.fn) == (1, 1, 0, 0)


def test_confusion_tie_rule_predicts_stalled():
    c = confusion(["stalled", "flowing"], [0.5, 0.5])
    assert (c.tp, c.fp) == (1, 1)


def test_confusion_matches_item_loop_oracle():
    rng = np.random.default_rng(71)
    labels = ["stalled" if x else "flowing" for x in rng.integers(0, 2, size=1000)]
    scores = rng.random(1000).tolist()
    c = confusion(labels, scores, threshold=0.5)
    tp = tn = fp = fn = 0
    for lab, s in zip(labels, scores):
        if s >= 0.5:
            if lab == "stalled":
                tp += 1
            else:
                fp += 1
        else:
            if lab == "stalled":
                fn += 1
            else:
                tn += 1
    assert (c.tp, c.tn, c.fp, c.fn) == (tp, tn, fp, fn)


def test_confusion_errors():
    with pytest.raises(LengthMismatch):
        confusion(["stalled"], [0.5, 0.5])
    with pytest.raises(EmptyInput):
        confusion([], [])


def test_accuracy_values():
    assert accuracy(ConfusionCounts(tp=45, tn=45, fp=5, fn=5)) == 0.90
    assert accuracy(ConfusionCounts(tp=3, tn=4, fp=0, fn=0)) == 1.0
    with pytest.raises(EmptyInput):
        accuracy(ConfusionCounts())


def test_mcc_perfect_prediction():
    assert mcc(ConfusionCounts(tp=5, tn=5, fp=0, fn=0)) == 1.0


def test_mcc_degenerate_denominator_zero_convention():
    assert mcc(ConfusionCounts(tp=5, fp=5, tn=0, fn=0)) == 0.0
    assert mcc(ConfusionCounts(tp=0, fp=0, tn=0, fn=7)) == 0.0


def test_mcc_closed_form_value():
    # (45*45 - 5*5) / sqrt(50^4) = 2000 / 2500
    assert abs(mcc(ConfusionCounts(tp=45, tn=45, fp=5, fn=5)) - 0.80) <= 1e-12


def test_mcc_symmetries_exact():
    rng = np.random.default_rng(73)
    for _ in range(300):
        tp, tn, fp, fn = (int(x) for x in rng.integers(0, 200, size=4))
        if tp + tn + fp + fn == 0:
            continue
        base = mcc(ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn))
        swapped = mcc(ConfusionCounts(tp=tn, tn=tp, fp=fn, fn=fp))
        inverted = mcc(ConfusionCounts(tp=fn, tn=fp, fp=tn, fn=tp))
        assert base == swapped
        assert inverted == -base
        assert -1.0 <= base <= 1.0


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        ConfusionCounts(tp=-1, tn=0, fp=0, fn=0)


def test_metrics_json_schema(tmp_path):
    write_metrics(ConfusionCounts(tp=4, tn=3, fp=2, fn=1), tmp_path / "m.json")
    doc = json.loads((tmp_path / "m.json").read_text())
    assert set(doc) == {"acc", "mcc", "tp", "tn", "fp", "fn"}
    assert doc["tp"] == 4 and doc["acc"] == 0.7
