"""Binary classification metrics: accuracy and Matthews Correlation Coefficient.

The positive class is "stalled". Internals stay in exact integer
arithmetic up to the final square root, so the symmetry properties of MCC
(class swap invariance, prediction-inversion antisymmetry) hold exactly
rather than to float tolerance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EmptyInput, LengthMismatch

POSITIVE_LABEL = "stalled"
DEFAULT_THRESHOLD = 0.5


@dataclass
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(
    labels: Sequence[str],
    scores: Sequence[float],
    threshold: float = DEFAULT_THRESHOLD,
) -> ConfusionCounts:
    """Tally TP/TN/FP/FN; a score >= threshold predicts the positive class."""
    if len(labels) != len(scores):
        raise LengthMismatch(f"{len(labels)} labels vs {len(scores)} scores")
    if not labels:
        raise EmptyInput("no label/score pairs")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    c = ConfusionCounts()
    for label, score in zip(labels, scores):
        predicted_positive = score >= threshold
        actual_positive = label == POSITIVE_LABEL
        if predicted_positive and actual_positive:
            c.tp += 1
        elif predicted_positive:
            c.fp += 1
        elif actual_positive:
            c.fn += 1
        else:
            c.tn += 1
    return c


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise EmptyInput("cannot compute accuracy over zero items")
    return (c.tp + c.tn) / c.total


def mcc(c: ConfusionCounts) -> float:
    """(tp*tn - fp*fn) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn)); 0 if any factor is 0."""
    if c.total == 0:
        raise EmptyInput("cannot compute MCC over zero items")
    denom_sq = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom_sq == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom_sq)


def metrics_dict(c: ConfusionCounts) -> dict:
    return {
        "acc": accuracy(c),
        "mcc": mcc(c),
        "tp": c.tp,
        "tn": c.tn,
        "fp": c.fp,
        "fn": c.fn,
    }


def write_metrics(c: ConfusionCounts, path: str | Path) -> None:
    Path(path).write_text(json.dumps(metrics_dict(c), indent=2) + "\n")
