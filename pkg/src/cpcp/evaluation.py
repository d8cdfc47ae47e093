"""Clustering agreement metrics and the constraint-budget sweep."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


def _contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1.0)
    return table


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def nmi(
    labels_a: np.ndarray,
    labels_b: np.ndarray,
    normalization: str = "sqrt",
) -> float:
    """Normalized mutual information between two flat labelings.

    0 log 0 counts as 0. If either side has a single class the score is
    1.0 when the two partitions are identical as set partitions and 0.0
    otherwise.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if len(a) != len(b):
        raise ValidationError("labelings must have equal length")
    if len(a) == 0:
        raise ValidationError("labelings are empty")
    if normalization not in ("sqrt", "max"):
        raise ValidationError(f"unknown normalization '{normalization}'")

    table = _contingency(a, b)
    joint = table / table.sum()
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    ha = _entropy(pa)
    hb = _entropy(pb)

    if ha == 0.0 or hb == 0.0:
        same = len(np.unique(a)) == 1 and len(np.unique(b)) == 1
        return 1.0 if same else 0.0

    outer = np.outer(pa, pb)
    mask = joint > 0
    mi = float(np.sum(joint[mask] * np.log(joint[mask] / outer[mask])))
    denom = np.sqrt(ha * hb) if normalization == "sqrt" else max(ha, hb)
    return mi / denom


def expand_multilabel(
    true_labels: list[list[int]],
    predicted: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Replicate each instance once per true label, copying its single
    prediction. Returns (expanded_truth, expanded_prediction)."""
    predicted = np.asarray(predicted).ravel()
    if len(true_labels) != len(predicted):
        raise ValidationError("one prediction per instance is required")
    truth, pred = [], []
    for labels, p in zip(true_labels, predicted):
        if len(labels) == 0:
            raise ValidationError("every instance needs at least one label")
        for lab in labels:
            truth.append(lab)
            pred.append(p)
    return np.asarray(truth), np.asarray(pred)


def multilabel_nmi(
    true_labels: list[list[int]],
    predicted: np.ndarray,
    normalization: str = "sqrt",
) -> float:
    """NMI on the label-replicated expansion, divided by the score of an
    ideal predictor (one deterministic true label per instance) under
    the same expansion. Reduces to plain NMI when every instance has
    one label."""
    truth, pred = expand_multilabel(true_labels, predicted)
    score = nmi(truth, pred, normalization)
    ideal = np.asarray([min(labels) for labels in true_labels])
    ideal_truth, ideal_pred = expand_multilabel(true_labels, ideal)
    ideal_score = nmi(ideal_truth, ideal_pred, normalization)
    if ideal_score == 0.0:
        return 0.0
    return score / ideal_score


@dataclass(frozen=True)
class SweepPoint:
    fraction: float
    count: int
    mean: float
    best: float
    worst: float
    scores: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "count": self.count,
            "mean": self.mean,
            "best": self.best,
            "worst": self.worst,
            "scores": list(self.scores),
        }


def sweep(
    run_once,
    n: int,
    fractions: list[float],
    repeats: int,
    seed: int,
) -> list[SweepPoint]:
    """Score `run_once(fraction, seed)` at each constraint budget.

    Budgets are fractions of the n(n-1)/2 possible pairs. Repeat r uses
    seed + r for both sampling and clustering inside run_once.
    """
    if repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {repeats}")
    total = n * (n - 1) // 2
    points = []
    for fraction in fractions:
        if not 0 < fraction < 1:
            raise ValidationError(
                f"budget fraction must lie in (0, 1), got {fraction}"
            )
        count = round(fraction * total)
        scores = tuple(float(run_once(fraction, seed + r)) for r in range(repeats))
        points.append(
            SweepPoint(
                fraction=float(fraction),
                count=count,
                mean=float(np.mean(scores)),
                best=float(np.max(scores)),
                worst=float(np.min(scores)),
                scores=scores,
            )
        )
    return points
