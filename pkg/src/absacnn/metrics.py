"""Evaluation metrics: micro-averaged F1 over aspect sets, polarity accuracy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class Slot1Score:
    """Pooled set-comparison counts with derived precision/recall/F1."""

    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass(frozen=True)
class Slot3Score:
    correct: int
    total: int
    accuracy: float

    def to_dict(self) -> dict:
        return {"correct": self.correct, "total": self.total, "accuracy": self.accuracy}


def micro_f1(gold: Sequence[set], pred: Sequence[set]) -> Slot1Score:
    """Micro-averaged F1 of predicted label sets against gold label sets.

    True/false positives and false negatives are pooled over all aligned
    sentence pairs before computing precision and recall; F1 is 0 when both
    are 0.
    """
    if len(gold) != len(pred):
        raise ValueError(
            f"gold and prediction lengths differ: {len(gold)} != {len(pred)}"
        )
    tp = fp = fn = 0
    for g, p in zip(gold, pred):
        tp += len(g & p)
        fp += len(p - g)
        fn += len(g - p)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Slot1Score(tp, fp, fn, precision, recall, f1)


def accuracy(gold: Sequence, pred: Sequence) -> Slot3Score:
    """Fraction of aligned predictions equal to gold; undefined when empty."""
    if len(gold) != len(pred):
        raise ValueError(
            f"gold and prediction lengths differ: {len(gold)} != {len(pred)}"
        )
    if len(gold) == 0:
        raise ValueError("accuracy is undefined for empty inputs")
    correct = sum(1 for g, p in zip(gold, pred) if g == p)
    return Slot3Score(correct, len(gold), correct / len(gold))
