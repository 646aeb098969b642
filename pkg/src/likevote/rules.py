"""Most-liked-party predictor with Min Likes and Party Like Cap filters."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Dataset, PartyCountVector, count_matrix
from .errors import ValidationError

EXCLUDED = None


@dataclass(frozen=True)
class GridCell:
    min_likes: int
    plc: float
    n_included: int
    accuracy: float | None
    ci_95: float | None


def _check(min_likes, plc):
    if min_likes < 1:
        raise ValidationError("min_likes must be >= 1")
    if not 0.0 <= plc <= 1.0:
        raise ValidationError("plc must lie in [0, 1]")


def rule_predict(v: PartyCountVector | Sequence[int], min_likes: int = 1, plc: float = 0.0):
    """Index of the most-liked party, or ``None`` when the respondent is excluded.

    Excluded when the total is below ``min_likes`` or the leading party's
    share is below ``plc``. Ties go to the lowest party index.
    """
    _check(min_likes, plc)
    counts = v.as_array() if isinstance(v, PartyCountVector) else np.asarray(v)
    total = counts.sum()
    if total < min_likes or total == 0:
        return EXCLUDED
    top = int(np.argmax(counts))
    if counts[top] / total < plc:
        return EXCLUDED
    return top


def rule_predict_matrix(counts: np.ndarray, min_likes: int = 1, plc: float = 0.0):
    """Vectorised ``rule_predict``: (predicted index, included mask)."""
    _check(min_likes, plc)
    counts = np.asarray(counts)
    total = counts.sum(axis=1)
    top = np.argmax(counts, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = counts[np.arange(len(counts)), top] / total
    included = (total >= min_likes) & (total > 0) & (share >= plc)
    return top, included


def _cell(counts, labels, min_likes, plc) -> GridCell:
    top, inc = rule_predict_matrix(counts, min_likes, plc)
    n = int(inc.sum())
    if n == 0:
        return GridCell(min_likes, float(plc), 0, None, None)
    acc = float(np.mean(top[inc] == labels[inc]))
    return GridCell(min_likes, float(plc), n, acc, float(1.96 * np.sqrt(acc * (1 - acc) / n)))


def sweep_grid(ds: Dataset, min_likes_list: Sequence[int], plc_list: Sequence[float]) -> list[GridCell]:
    """Accuracy of the rule over every (min_likes, plc) pair, in-sample.

    Respondents without a vote intent are ignored. Cells are ordered by
    min_likes, then plc, both ascending as given.
    """
    keep = [r.survey.vote_intent is not None for r in ds.respondents]
    ds = ds.subset(keep)
    counts = count_matrix(ds)
    labels = np.array([ds.party_space.index(r.survey.vote_intent) for r in ds.respondents],
                      dtype=np.int64)
    return [_cell(counts, labels, m, p) for m in min_likes_list for p in plc_list]


def sweep_counts(counts, labels, min_likes_list, plc_list) -> list[GridCell]:
    counts = np.asarray(counts)
    labels = np.asarray(labels)
    return [_cell(counts, labels, m, p) for m in min_likes_list for p in plc_list]


def _fmt(v):
    return "" if v is None else repr(v)


def write_grid_csv(cells: Sequence[GridCell], path: str | Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["min_likes", "plc", "n", "accuracy", "ci"])
        for c in cells:
            w.writerow([c.min_likes, repr(c.plc), c.n_included, _fmt(c.accuracy), _fmt(c.ci_95)])


def grid_matrix(cells: Sequence[GridCell]):
    """Accuracy surface as (min_likes values, plc values, 2-D array with nan gaps)."""
    mins = sorted({c.min_likes for c in cells})
    plcs = sorted({c.plc for c in cells})
    acc = np.full((len(mins), len(plcs)), np.nan)
    for c in cells:
        if c.accuracy is not None:
            acc[mins.index(c.min_likes), plcs.index(c.plc)] = c.accuracy
    return mins, plcs, acc


def write_grid_matrix(cells: Sequence[GridCell], path: str | Path):
    """Rows = min_likes, columns = plc; blank where no respondent qualifies."""
    mins, plcs, acc = grid_matrix(cells)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["min_likes\\plc", *(repr(p) for p in plcs)])
        for m, row in zip(mins, acc):
            w.writerow([m, *("" if np.isnan(a) else repr(float(a)) for a in row)])
