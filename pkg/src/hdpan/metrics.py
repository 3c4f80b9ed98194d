"""Confusion-matrix metrics for binary classification.

Predictions use the >= threshold convention (a prob exactly at threshold
counts positive).  Zero-denominator metrics are defined as 0.0 rather than
raising; degenerate_metrics() reports which ones were degenerate so reports
can annotate them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(probs, truths, threshold: float = 0.5) -> ConfusionMatrix:
    probs = np.asarray(probs, dtype=np.float64)
    truths = np.asarray(truths)
    if probs.shape != truths.shape:
        raise ValueError(f"length mismatch: {probs.shape} vs {truths.shape}")
    pred = probs >= threshold
    truth = truths.astype(bool)
    return ConfusionMatrix(
        tp=int(np.sum(pred & truth)),
        fp=int(np.sum(pred & ~truth)),
        tn=int(np.sum(~pred & ~truth)),
        fn=int(np.sum(~pred & truth)),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        return 0.0
    return (cm.tp + cm.tn) / cm.total


def precision(cm: ConfusionMatrix) -> float:
    denom = cm.tp + cm.fp
    return cm.tp / denom if denom else 0.0


def recall(cm: ConfusionMatrix) -> float:
    denom = cm.tp + cm.fn
    return cm.tp / denom if denom else 0.0


def f1(cm: ConfusionMatrix) -> float:
    p, r = precision(cm), recall(cm)
    return 2.0 * p * r / (p + r) if p + r > 0.0 else 0.0


def degenerate_metrics(cm: ConfusionMatrix) -> set[str]:
    """Names of metrics whose denominator was zero for this matrix."""
    flags = set()
    if cm.total == 0:
        flags.add("accuracy")
    if cm.tp + cm.fp == 0:
        flags.add("precision")
    if cm.tp + cm.fn == 0:
        flags.add("recall")
    if precision(cm) + recall(cm) == 0.0:
        flags.add("f1")
    return flags
