"""L1-penalised multinomial logistic regression.

The model keeps one coefficient row per class (no pivot class) and an
unpenalised intercept per class. Training minimises

    sum_i [logsumexp(z_i) - z_{i, y_i}] + lam * sum |W|,    z_i = W x_i + b

by proximal gradient descent: a gradient step on the smooth negative
log-likelihood followed by soft-thresholding of the non-intercept
coefficients. Features are standardised inside ``fit`` and coefficients are
reported on the standardised scale.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NonFinite, SchemaMismatch, SingleClass, TooFewSamples, ValidationError
from .features import FeatureMatrix

DEFAULT_GRID = (0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 10.0, 15.0)


@dataclass(frozen=True)
class FixedStep:
    eta: float


@dataclass(frozen=True)
class BacktrackingLineSearch:
    """Backtrack on the quadratic upper bound. Trial steps come from the
    Barzilai-Borwein ratio of the last two iterates when ``bb`` is set,
    otherwise the previous step times ``grow``."""

    shrink: float = 0.5
    grow: float = 1.5
    bb: bool = True


@dataclass(frozen=True)
class FitConfig:
    lam: float = 0.0
    max_iters: int = 3000
    step_rule: FixedStep | BacktrackingLineSearch = field(default_factory=BacktrackingLineSearch)
    tol: float = 1e-7
    penalize_intercept: bool = False
    standardize: bool = True

    # ridge term is not supported; kept as a constant for callers that ask
    l2 = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValidationError(f"lambda must be a nonnegative real, got {self.lam}")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be positive")
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if self.penalize_intercept:
            raise ValidationError("intercepts are never penalised")
        if isinstance(self.step_rule, FixedStep) and not self.step_rule.eta > 0:
            raise ValidationError("fixed step must be positive")


@dataclass
class FitResult:
    coefficients: np.ndarray  # (n_classes, d), standardised scale
    intercepts: np.ndarray  # (n_classes,)
    lambda_used: float
    objective_trace: list[float]
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    columns: tuple[str, ...] | None = None
    converged: bool = False

    @property
    def n_classes(self) -> int:
        return self.coefficients.shape[0]

    @property
    def included(self) -> int:
        return int(np.count_nonzero(self.coefficients) + np.count_nonzero(self.intercepts))

    @property
    def total(self) -> int:
        return self.coefficients.size + self.intercepts.size

    @property
    def n_iter(self) -> int:
        return len(self.objective_trace) - 1

    def to_dict(self, with_trace: bool = True) -> dict:
        d = {
            "coefficients": self.coefficients.tolist(),
            "columns": list(self.columns) if self.columns is not None else None,
            "converged": self.converged,
            "feature_mean": self.feature_mean.tolist(),
            "feature_scale": self.feature_scale.tolist(),
            "included": self.included,
            "intercepts": self.intercepts.tolist(),
            "lambda_used": self.lambda_used,
            "total": self.total,
        }
        if with_trace:
            d["objective_trace"] = list(self.objective_trace)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        try:
            return cls(
                coefficients=np.array(d["coefficients"], dtype=float),
                intercepts=np.array(d["intercepts"], dtype=float),
                lambda_used=float(d["lambda_used"]),
                objective_trace=list(d.get("objective_trace", [])),
                feature_mean=np.array(d["feature_mean"], dtype=float),
                feature_scale=np.array(d["feature_scale"], dtype=float),
                columns=tuple(d["columns"]) if d.get("columns") is not None else None,
                converged=bool(d.get("converged", False)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaMismatch(f"malformed fit result: {e!r}") from None

    def save(self, path: str | Path, with_trace: bool = True):
        Path(path).write_text(json.dumps(self.to_dict(with_trace), sort_keys=True, indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FitResult":
        return cls.from_dict(json.loads(Path(path).read_text()))


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0), elementwise."""
    if np.any(np.asarray(t) < 0):
        raise ValidationError("threshold must be nonnegative")
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def one_hot(y: np.ndarray, n_classes: int) -> np.ndarray:
    Y = np.zeros((len(y), n_classes))
    Y[np.arange(len(y)), y] = 1.0
    return Y


def multinomial_nll(W, b, X, Y, with_grad: bool = True):
    """Summed multinomial negative log-likelihood and its gradient.

    ``Y`` is the one-hot label matrix. Returns ``nll`` or ``(nll, gW, gb)``.
    """
    Z = X @ W.T + b
    Z -= Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    S = E.sum(axis=1)
    nll = float(np.log(S).sum() - np.sum(Z * Y))
    if not with_grad:
        return nll
    G = E / S[:, None] - Y
    return nll, G.T @ X, G.sum(axis=0)


def _forward(W, b, Xt, Yt):
    """NLL and residual softmax(Z) - Y, both in class-major (K, n) layout.

    Class-major keeps the per-sample reductions running over long contiguous
    rows, which is several times faster than reducing a 9-wide axis.
    """
    Z = W @ Xt
    Z += b[:, None]
    Z -= Z.max(axis=0)
    E = np.exp(Z)
    S = E.sum(axis=0)
    nll = float(np.log(S).sum() - np.einsum("kn,kn->", Z, Yt))
    E /= S
    E -= Yt
    return nll, E


def penalized_objective(W, b, X, Y, lam: float) -> float:
    return multinomial_nll(W, b, X, Y, with_grad=False) + lam * float(np.abs(W).sum())


def _check_inputs(X, y, n_classes):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or y.ndim != 1 or len(y) != X.shape[0]:
        raise SchemaMismatch(f"X shape {X.shape} incompatible with y length {len(y)}")
    if not np.all(np.isfinite(X)):
        raise NonFinite("feature matrix contains non-finite values")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.isfinite(y)) or np.any(y != np.round(y)):
            raise NonFinite("labels must be integer class indices")
        y = y.astype(np.int64)
    if len(y) < 2:
        raise TooFewSamples("need at least two samples")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if y.min() < 0 or y.max() >= n_classes:
        raise SchemaMismatch(f"labels must lie in [0, {n_classes})")
    if len(np.unique(y)) < 2:
        raise SingleClass("need at least two distinct labels")
    return X, y.astype(np.int64), n_classes


def _canonical_order(X, y):
    # Sorting rows makes the fit independent of the caller's row order.
    keys = [X[:, j] for j in range(X.shape[1] - 1, -1, -1)] + [y]
    return np.lexsort(keys)


def standardization(X, enabled: bool = True):
    if not enabled:
        return np.zeros(X.shape[1]), np.ones(X.shape[1])
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < 1e-12] = 1.0
    return mean, scale


def fit(X, y, cfg: FitConfig = FitConfig(), n_classes: int | None = None) -> FitResult:
    """Train by proximal gradient from zero coefficients and log-frequency intercepts.

    Hitting ``max_iters`` is not an error; check ``converged``.
    """
    columns = X.columns if isinstance(X, FeatureMatrix) else None
    X = X.values if isinstance(X, FeatureMatrix) else X
    X, y, K = _check_inputs(X, y, n_classes)
    order = _canonical_order(X, y)
    X, y = X[order], y[order]
    mean, scale = standardization(X, cfg.standardize)
    Xs = (X - mean) / scale
    Y = one_hot(y, K)
    n, d = Xs.shape
    lam = float(cfg.lam)

    # 0.5 bounds the largest eigenvalue of the softmax Hessian block
    lip = 0.5 * (np.linalg.norm(Xs, 2) ** 2 + n) if d else 0.5 * n
    eta = cfg.step_rule.eta if isinstance(cfg.step_rule, FixedStep) else 1.0 / lip
    backtrack = isinstance(cfg.step_rule, BacktrackingLineSearch)

    Xt = np.ascontiguousarray(Xs.T)
    Yt = np.ascontiguousarray(Y.T)
    W = np.zeros((K, d))
    # intercept-only optimum: exact whenever lambda zeroes every coefficient
    counts = np.bincount(y, minlength=K).astype(float)
    b = np.log(np.where(counts > 0, counts, 0.5))
    b -= b.mean()
    f, G = _forward(W, b, Xt, Yt)
    F = f
    trace = [F]
    converged = False
    gW, gb = G @ Xs, G.sum(axis=1)
    for _ in range(cfg.max_iters):
        while True:
            W_new = soft_threshold(W - eta * gW, eta * lam) if d else W
            b_new = b - eta * gb
            f_new, G_new = _forward(W_new, b_new, Xt, Yt)
            if not backtrack:
                break
            dW, db = W_new - W, b_new - b
            quad = f + np.sum(gW * dW) + gb @ db + (np.sum(dW * dW) + db @ db) / (2 * eta)
            if f_new <= quad + 1e-12 * max(1.0, abs(f)):
                break
            eta *= cfg.step_rule.shrink
        gW_new, gb_new = G_new @ Xs, G_new.sum(axis=1)
        if backtrack:
            if cfg.step_rule.bb:
                sW, sb = W_new - W, b_new - b
                ss = np.sum(sW * sW) + sb @ sb
                sr = np.sum(sW * (gW_new - gW)) + sb @ (gb_new - gb)
                eta = ss / sr if sr > 1e-16 * ss and ss > 0 else eta * cfg.step_rule.grow
                eta = min(max(eta, 1e-3 / lip), 1e6 / lip)
            else:
                eta *= cfg.step_rule.grow
        W, b, f, G, gW, gb = W_new, b_new, f_new, G_new, gW_new, gb_new
        F_new = f + lam * float(np.abs(W).sum())
        trace.append(F_new)
        if abs(F - F_new) <= cfg.tol * max(1.0, abs(F)):
            converged = True
            F = F_new
            break
        F = F_new

    return FitResult(
        coefficients=W,
        intercepts=b,
        lambda_used=lam,
        objective_trace=[float(v) for v in trace],
        feature_mean=mean,
        feature_scale=scale,
        columns=columns,
        converged=converged,
    )


def decision_function(fr: FitResult, X) -> np.ndarray:
    if isinstance(X, FeatureMatrix):
        if fr.columns is not None and tuple(X.columns) != tuple(fr.columns):
            raise SchemaMismatch("feature columns differ from the training columns")
        X = X.values
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != fr.coefficients.shape[1]:
        raise SchemaMismatch(
            f"expected {fr.coefficients.shape[1]} feature columns, got shape {X.shape}"
        )
    return ((X - fr.feature_mean) / fr.feature_scale) @ fr.coefficients.T + fr.intercepts


def predict_proba(fr: FitResult, X) -> np.ndarray:
    Z = decision_function(fr, X)
    E = np.exp(Z - Z.max(axis=1, keepdims=True))
    return E / E.sum(axis=1, keepdims=True)


def predict(fr: FitResult, X) -> np.ndarray:
    return np.argmax(decision_function(fr, X), axis=1)


# -- cross-validation ---------------------------------------------------------


@dataclass
class CvResult:
    grid: list[float]
    fold_accuracies: np.ndarray  # (len(grid), k)
    chosen_lambda: float
    ci_95: float
    folds: np.ndarray  # fold index of each row
    oof_proba: np.ndarray  # out-of-fold probabilities at the chosen lambda

    @property
    def k(self) -> int:
        return self.fold_accuracies.shape[1]

    @property
    def mean_accuracies(self) -> np.ndarray:
        return self.fold_accuracies.mean(axis=1)

    @property
    def chosen_index(self) -> int:
        return self.grid.index(self.chosen_lambda)

    @property
    def accuracy(self) -> float:
        return float(self.mean_accuracies[self.chosen_index])


def stratified_folds(y: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold index per row; each class is dealt round-robin after a seeded shuffle."""
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        folds[idx] = (offset + np.arange(len(idx))) % k
        offset += len(idx)
    return folds


def ci_half_width(accs) -> float:
    accs = np.asarray(accs, dtype=float)
    return float(1.96 * accs.std(ddof=1) / np.sqrt(len(accs)))


def cross_validate(
    X,
    y,
    grid: Sequence[float] = DEFAULT_GRID,
    k: int = 10,
    seed: int = 0,
    n_classes: int | None = None,
    base: FitConfig = FitConfig(),
    threads: int = 1,
) -> CvResult:
    """k-fold stratified CV over a lambda grid.

    The chosen lambda maximises mean fold accuracy (ties go to the smaller
    lambda). ``ci_95`` is the normal-approximation half-width over the k fold
    accuracies of the chosen lambda.
    """
    Xv = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    y = np.asarray(y)
    if not grid:
        raise ValidationError("lambda grid is empty")
    if k < 2:
        raise ValidationError("need at least two folds")
    if len(y) < k:
        raise TooFewSamples(f"{len(y)} samples cannot fill {k} folds")
    _, y, K = _check_inputs(Xv, y, n_classes)
    grid = sorted(float(g) for g in grid)
    folds = stratified_folds(y, k, seed)

    def run(task):
        gi, fi = task
        train, test = folds != fi, folds == fi
        cfg = FitConfig(
            lam=grid[gi],
            max_iters=base.max_iters,
            step_rule=base.step_rule,
            tol=base.tol,
            standardize=base.standardize,
        )
        fr = fit(Xv[train], y[train], cfg, n_classes=K)
        proba = predict_proba(fr, Xv[test])
        return proba

    tasks = [(gi, fi) for gi in range(len(grid)) for fi in range(k)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            probas = list(pool.map(run, tasks))
    else:
        probas = [run(t) for t in tasks]

    accs = np.zeros((len(grid), k))
    oof = np.zeros((len(grid), len(y), K))
    for (gi, fi), proba in zip(tasks, probas):
        test = folds == fi
        accs[gi, fi] = np.mean(np.argmax(proba, axis=1) == y[test])
        oof[gi, test] = proba
    means = accs.mean(axis=1)
    best = int(np.flatnonzero(means == means.max())[0])
    return CvResult(
        grid=grid,
        fold_accuracies=accs,
        chosen_lambda=grid[best],
        ci_95=ci_half_width(accs[best]),
        folds=folds,
        oof_proba=oof[best],
    )
