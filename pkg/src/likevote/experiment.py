"""End-to-end model runs: features, cross-validated lasso fit, and the
five-model comparison table on one dataset."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Dataset, StudyConfig, default_config
from .features import MODEL_ORDER, FeatureMatrix, ModelKind, build_matrix, model_sample
from .lasso import DEFAULT_GRID, CvResult, FitConfig, FitResult, cross_validate, fit
from .metrics import EvalReport, evaluate_folds
from .synth import GenConfig, generate

DESCRIPTIONS = {
    ModelKind.BASELINE: "Survey answers",
    ModelKind.SINGLE_LIKE: "Single latest political like",
    ModelKind.ALL_LIKES: "All political likes",
    ModelKind.COMBINED: "All political likes + survey",
    ModelKind.ALL_LIKES_MIN7: "All political likes, Min Likes 7",
}


@dataclass
class ModelRun:
    kind: ModelKind
    features: FeatureMatrix
    labels: np.ndarray
    cv: CvResult
    final: FitResult
    report: EvalReport


def run_model(ds: Dataset, kind: ModelKind | str, study: StudyConfig | None = None,
              grid: Sequence[float] = DEFAULT_GRID, k: int = 10, seed: int = 0,
              threads: int = 1, base: FitConfig = FitConfig()) -> ModelRun:
    """Cross-validate one model, then refit at the chosen lambda on the whole sample."""
    study = default_config() if study is None else study
    kind = ModelKind(kind)
    sub = model_sample(ds, kind)
    X, y = build_matrix(sub, kind, study.survey)
    n_classes = len(study.party_space)
    cv = cross_validate(X, y, grid, k=k, seed=seed, n_classes=n_classes, base=base,
                        threads=threads)
    cfg = FitConfig(lam=cv.chosen_lambda, max_iters=base.max_iters, step_rule=base.step_rule,
                    tol=base.tol, standardize=base.standardize)
    final = fit(X, y, cfg, n_classes=n_classes)
    report = evaluate_folds(cv.oof_proba, y, cv.folds, study.party_space, cv.ci_95)
    return ModelRun(kind, X, y, cv, final, report)


TABLE_ROWS = (
    ("Sample size", lambda r: f"{r.report.n}"),
    ("L1-Penalty", lambda r: f"{r.cv.chosen_lambda:.1f}"),
    ("Incl./excl. Coefficients", lambda r: f"{r.final.included}/{r.final.total}"),
    ("+/- 95% CI", lambda r: f"{r.report.ci_95:.3f}"),
    ("Precision", lambda r: f"{r.report.macro_precision:.3f}"),
    ("Recall", lambda r: f"{r.report.macro_recall:.3f}"),
    ("Accuracy", lambda r: f"{r.report.accuracy:.3f}"),
    ("Left/Right Acc.", lambda r: f"{r.report.left_right_accuracy:.3f}"),
    ("AUC", lambda r: f"{r.report.auc_macro:.3f}"),
)


def replicate(gen: GenConfig, study: StudyConfig | None = None,
              grid: Sequence[float] = DEFAULT_GRID, k: int = 10, threads: int = 1,
              models: Sequence[ModelKind] = MODEL_ORDER) -> list[ModelRun]:
    """Generate a planted dataset from ``gen`` and run every model on it."""
    study = default_config() if study is None else study
    ds = generate(gen, study)
    return [run_model(ds, m, study, grid, k, gen.seed, threads) for m in models]


def ordering_holds(runs: Sequence[ModelRun]) -> dict[str, bool]:
    """Pairwise gaps of the comparison table, each required to exceed 2 * max CI."""
    acc = {r.kind: r.report for r in runs}

    def gap(hi, lo):
        a, b = acc[hi], acc[lo]
        return a.accuracy - b.accuracy > 2 * max(a.ci_95, b.ci_95)

    return {
        "all_likes>single_like": gap(ModelKind.ALL_LIKES, ModelKind.SINGLE_LIKE),
        "single_like>baseline": gap(ModelKind.SINGLE_LIKE, ModelKind.BASELINE),
        "all_likes_min7>all_likes": gap(ModelKind.ALL_LIKES_MIN7, ModelKind.ALL_LIKES),
    }


def table_rows(runs: Sequence[ModelRun]) -> list[list[str]]:
    header = ["", *(r.kind.value for r in runs)]
    rows = [header, ["Description", *(DESCRIPTIONS[r.kind] for r in runs)]]
    rows += [[name, *(fmt(r) for r in runs)] for name, fmt in TABLE_ROWS]
    return rows


def format_table(runs: Sequence[ModelRun]) -> str:
    rows = table_rows(runs)
    widths = [max(len(row[j]) for row in rows) for j in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def write_table_csv(runs: Sequence[ModelRun], path: str | Path):
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(table_rows(runs))
