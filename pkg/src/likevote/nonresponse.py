"""Permutation tests of chi-squared scores for subsample skew.

For each survey item, a null distribution is built from chi-squared scores
between two disjoint random samples of the full survey. The comparison
distribution pairs a random full-survey sample with a random sample from the
subsample. An item is skewed when the mean comparison score exceeds the
null 97.5% quantile; the grade is set by how far it exceeds it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import Dataset
from .errors import EmptyCategorySet, SubNotSubset

DEFAULT_GRADES = (2.0, 4.0)  # excess ratio bounds for Small and Medium


class Skew(str, Enum):
    NOT_SIGNIFICANT = "NotSignificant"
    SMALL = "Small"
    MEDIUM = "Medium"
    LARGE = "Large"


_ORDER = [Skew.NOT_SIGNIFICANT, Skew.SMALL, Skew.MEDIUM, Skew.LARGE]


def skew_rank(s: Skew) -> int:
    return _ORDER.index(Skew(s))


@dataclass(frozen=True)
class SkewReport:
    feature: str
    x2_mean: float
    q025: float
    q975: float
    null_mean: float
    null_q025: float
    null_q975: float
    excess: float
    skew: Skew
    n_sub: int
    sample_size: int


def _chi2_rows(a, b):
    """Row-wise goodness-of-fit chi-squared of ``b`` against ``a``'s proportions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # half-count smoothing where a category is unseen in a but observed in b
    needs = np.any((a == 0) & (b > 0), axis=-1, keepdims=True)
    a = np.where(needs, a + 0.5, a)
    expected = a / a.sum(axis=-1, keepdims=True) * b.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (b - expected) ** 2 / expected, 0.0)
    return terms.sum(axis=-1)


def chi_squared(dist_a, dist_b) -> float:
    """Pearson chi-squared of b's counts against expected counts from a's proportions."""
    a = np.asarray(dist_a, dtype=float)
    b = np.asarray(dist_b, dtype=float)
    if a.ndim != 1 or a.size == 0 or a.shape != b.shape:
        raise EmptyCategorySet("count vectors must share a nonempty category set")
    if a.sum() < 1 or b.sum() < 1:
        raise EmptyCategorySet("both distributions need a total of at least one")
    return float(_chi2_rows(a, b))


def grade(x2_mean: float, null_q975: float, bounds=DEFAULT_GRADES) -> tuple[float, Skew]:
    if null_q975 <= 0:
        excess = 0.0 if x2_mean <= 0 else float("inf")
    else:
        excess = x2_mean / null_q975
    if excess <= 1.0:
        return excess, Skew.NOT_SIGNIFICANT
    if excess <= bounds[0]:
        return excess, Skew.SMALL
    if excess <= bounds[1]:
        return excess, Skew.MEDIUM
    return excess, Skew.LARGE


def _answers(ds: Dataset, feature: str) -> list[str]:
    return ["none" if v is None else str(v) for v in (r.survey.value(feature) for r in ds)]


def _count_batches(codes, n_cat, idx):
    out = np.zeros((idx.shape[0], n_cat))
    picked = codes[idx]
    for c in range(n_cat):
        out[:, c] = (picked == c).sum(axis=1)
    return out


def permutation_skew(full: Dataset, sub: Dataset, feature: str, n_perm: int = 10_000,
                     seed: int = 0, bounds=DEFAULT_GRADES, batch: int = 500) -> SkewReport:
    """Grade the skew of one survey item in ``sub`` relative to ``full``.

    Both sides of every comparison draw ``min(len(sub), len(full) // 2)``
    respondents without replacement.
    """
    full_ids = set(full.ids)
    if not set(sub.ids) <= full_ids:
        raise SubNotSubset("subsample contains respondents missing from the full survey")
    fv = _answers(full, feature)
    sv = _answers(sub, feature)
    cats = sorted(set(fv) | set(sv))
    if not cats:
        raise EmptyCategorySet(f"no answers for {feature!r}")
    lookup = {c: i for i, c in enumerate(cats)}
    fcodes = np.array([lookup[v] for v in fv])
    scodes = np.array([lookup[v] for v in sv])
    n_full, n_sub = len(fcodes), len(scodes)
    m = min(n_sub, n_full // 2)
    if m < 1:
        raise EmptyCategorySet("subsample or full survey too small to compare")

    rng = np.random.default_rng(seed)
    null, obs = [], []
    done = 0
    while done < n_perm:
        b = min(batch, n_perm - done)
        keys = rng.random((b, n_full))
        part = np.argpartition(keys, [m - 1, 2 * m - 1], axis=1)
        a_idx, b_idx = part[:, :m], part[:, m:2 * m]
        null.append(_chi2_rows(_count_batches(fcodes, len(cats), a_idx),
                               _count_batches(fcodes, len(cats), b_idx)))
        full_idx = np.argpartition(rng.random((b, n_full)), m - 1, axis=1)[:, :m]
        if m < n_sub:
            sub_idx = np.argpartition(rng.random((b, n_sub)), m - 1, axis=1)[:, :m]
        else:
            sub_idx = np.tile(np.arange(n_sub), (b, 1))
        obs.append(_chi2_rows(_count_batches(fcodes, len(cats), full_idx),
                              _count_batches(scodes, len(cats), sub_idx)))
        done += b
    null = np.concatenate(null)
    obs = np.concatenate(obs)
    x2_mean = float(obs.mean())
    null_q975 = float(np.quantile(null, 0.975))
    excess, skew = grade(x2_mean, null_q975, bounds)
    return SkewReport(
        feature=feature,
        x2_mean=x2_mean,
        q025=float(np.quantile(obs, 0.025)),
        q975=float(np.quantile(obs, 0.975)),
        null_mean=float(null.mean()),
        null_q025=float(np.quantile(null, 0.025)),
        null_q975=null_q975,
        excess=float(excess),
        skew=skew,
        n_sub=n_sub,
        sample_size=m,
    )


def survey_features(schema) -> list[str]:
    return ["vote_intent", *schema.opinion_items, *schema.categorical]


def write_skew_table(reports: Mapping[str, Sequence[SkewReport]], path: str | Path):
    """One row per (subsample, feature) with the null and comparison statistics."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subsample", "n_sub", "feature", "x2_mean", "q025", "q975",
                    "null_mean", "null_q025", "null_q975", "excess", "skew"])
        for name, rows in reports.items():
            for r in rows:
                w.writerow([name, r.n_sub, r.feature, f"{r.x2_mean:.6g}", f"{r.q025:.6g}",
                            f"{r.q975:.6g}", f"{r.null_mean:.6g}", f"{r.null_q025:.6g}",
                            f"{r.null_q975:.6g}", f"{r.excess:.6g}", r.skew.value])
