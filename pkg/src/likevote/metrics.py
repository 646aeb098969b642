"""Classification metrics: accuracy, macro precision/recall, thresholded
one-vs-rest ROC AUC, and left/right bloc collapse."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import PartySpace
from .errors import DegenerateGold, LengthMismatch, SchemaMismatch, ValidationError

AUC_STEP = 1e-4


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    auc_macro: float
    left_right_accuracy: float
    left_right_auc: float
    ci_95: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False) + "\n"


def _pair(pred, gold):
    pred = np.asarray(pred)
    gold = np.asarray(gold)
    if pred.shape != gold.shape or pred.ndim != 1:
        raise LengthMismatch(f"pred {pred.shape} vs gold {gold.shape}")
    return pred, gold


def accuracy(pred, gold) -> float:
    """Fraction of exact matches over all samples (not averaged per class)."""
    pred, gold = _pair(pred, gold)
    if len(gold) == 0:
        raise LengthMismatch("need at least one prediction")
    return float(np.mean(pred == gold))


def macro_precision_recall(pred, gold, classes: Sequence | None = None) -> tuple[float, float]:
    """Unweighted per-class means of precision and recall.

    Precision is averaged over classes that occur in ``gold`` or ``pred``; a
    class that is never predicted contributes 0. Recall is averaged over
    classes that occur in ``gold``.
    """
    pred, gold = _pair(pred, gold)
    if classes is None:
        classes = np.union1d(np.unique(pred), np.unique(gold))
    precisions, recalls = [], []
    for c in classes:
        in_gold = gold == c
        in_pred = pred == c
        if not in_gold.any() and not in_pred.any():
            continue
        tp = np.sum(in_gold & in_pred)
        precisions.append(tp / in_pred.sum() if in_pred.any() else 0.0)
        if in_gold.any():
            recalls.append(tp / in_gold.sum())
    p = float(np.mean(precisions)) if precisions else 0.0
    r = float(np.mean(recalls)) if recalls else 0.0
    return p, r


def roc_curve_thresholded(scores, positive, step: float = AUC_STEP):
    """(fpr, tpr) traced by sweeping thresholds 0, step, ..., 1.

    A sample counts as positive when ``score >= threshold``. The (0, 0)
    corner is appended so curves always span the unit square.
    """
    scores = np.asarray(scores, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    if step <= 0:
        raise ValidationError("step must be positive")
    n_steps = round(1.0 / step)
    if abs(n_steps * step - 1.0) < 1e-9:
        # k / n is the correctly rounded grid point; k * step can be an ulp off
        thresholds = np.arange(n_steps + 1) / n_steps
    else:
        thresholds = np.append(np.arange(int(np.floor(1.0 / step)) + 1) * step, 1.0)
    pos = np.sort(scores[positive])
    neg = np.sort(scores[~positive])
    tpr = (len(pos) - np.searchsorted(pos, thresholds, side="left")) / len(pos)
    fpr = (len(neg) - np.searchsorted(neg, thresholds, side="left")) / len(neg)
    fpr = np.append(fpr, 0.0)
    tpr = np.append(tpr, 0.0)
    return fpr, tpr


def binary_auc(scores, positive, step: float = AUC_STEP) -> float:
    fpr, tpr = roc_curve_thresholded(scores, positive, step)
    # thresholds ascend, so fpr/tpr descend; integrate right to left
    return float(np.sum((fpr[:-1] - fpr[1:]) * (tpr[:-1] + tpr[1:]) / 2))


def auc_ovr(scores, gold, step: float = AUC_STEP) -> float:
    """Macro one-vs-rest AUC over classes with both positives and negatives."""
    scores = np.asarray(scores, dtype=float)
    gold = np.asarray(gold)
    if scores.ndim != 2 or scores.shape[0] != len(gold):
        raise LengthMismatch(f"scores {scores.shape} vs gold {gold.shape}")
    aucs = []
    for c in range(scores.shape[1]):
        positive = gold == c
        if positive.all() or not positive.any():
            continue
        aucs.append(binary_auc(scores[:, c], positive, step))
    if not aucs:
        raise DegenerateGold("no class has both positive and negative samples")
    return float(np.mean(aucs))


def to_bloc(labels, party_space: PartySpace) -> np.ndarray:
    """Collapse party indices to 1 (Right) / 0 (Left)."""
    return party_space.right_mask()[np.asarray(labels, dtype=np.int64)].astype(np.int64)


def bloc_scores(scores, party_space: PartySpace) -> np.ndarray:
    """Probability of the Right bloc: the sum of its parties' probabilities."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape[1] != len(party_space):
        raise SchemaMismatch(f"need one score column per party, got {scores.shape}")
    return scores[:, party_space.right_mask()].sum(axis=1)


def left_right_metrics(pred_or_scores, gold, party_space: PartySpace, step: float = AUC_STEP):
    """Binary accuracy and AUC after collapsing parties into blocs.

    With a label vector, accuracy compares collapsed labels and the AUC is
    undefined (nan). With an n x 9 probability matrix, bloc probabilities are
    summed, the bloc is predicted at threshold 0.5 and the AUC uses the Right
    bloc probability as score.
    """
    arr = np.asarray(pred_or_scores)
    gold_bloc = to_bloc(gold, party_space)
    if arr.ndim == 1:
        pred_bloc = to_bloc(arr, party_space)
        return accuracy(pred_bloc, gold_bloc), float("nan")
    right = bloc_scores(arr, party_space)
    acc = accuracy((right > 0.5).astype(np.int64), gold_bloc)
    if gold_bloc.all() or not gold_bloc.any():
        return acc, float("nan")
    return acc, binary_auc(right, gold_bloc.astype(bool), step)


def evaluate(pred, gold, scores, party_space: PartySpace, ci_95: float = float("nan"),
             step: float = AUC_STEP) -> EvalReport:
    """All metrics for one set of predictions.

    Left/right accuracy is scored on the collapsed predicted labels so it can
    never fall below the multiclass accuracy; the left/right AUC comes from
    bloc-summed probabilities.
    """
    pred, gold = _pair(pred, gold)
    p, r = macro_precision_recall(pred, gold, classes=range(len(party_space)))
    lr_acc, _ = left_right_metrics(pred, gold, party_space)
    if scores is not None:
        auc = auc_ovr(scores, gold, step)
        _, lr_auc = left_right_metrics(scores, gold, party_space, step)
    else:
        auc = lr_auc = float("nan")
    return EvalReport(
        accuracy=accuracy(pred, gold),
        macro_precision=p,
        macro_recall=r,
        auc_macro=auc,
        left_right_accuracy=lr_acc,
        left_right_auc=lr_auc,
        ci_95=float(ci_95),
        n=len(gold),
    )


def evaluate_folds(proba, gold, folds, party_space: PartySpace, ci_95: float,
                   step: float = AUC_STEP) -> EvalReport:
    """Cross-validated averages: each metric computed per fold, then averaged."""
    proba = np.asarray(proba)
    gold = np.asarray(gold)
    reports = []
    for f in np.unique(folds):
        m = folds == f
        pred = np.argmax(proba[m], axis=1)
        try:
            reports.append(evaluate(pred, gold[m], proba[m], party_space, step=step))
        except DegenerateGold:
            reports.append(evaluate(pred, gold[m], None, party_space))
    mean = lambda attr: float(np.nanmean([getattr(r, attr) for r in reports]))
    return EvalReport(
        accuracy=mean("accuracy"),
        macro_precision=mean("macro_precision"),
        macro_recall=mean("macro_recall"),
        auc_macro=mean("auc_macro"),
        left_right_accuracy=mean("left_right_accuracy"),
        left_right_auc=mean("left_right_auc"),
        ci_95=float(ci_95),
        n=len(gold),
    )
