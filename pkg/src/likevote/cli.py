"""Command-line driver: one subcommand per pipeline stage, file-based handoff.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
Errors are reported as a single JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    HasAnyLikes,
    filter_dataset,
    like_counts,
    load_config,
    read_dataset,
    read_jsonl,
    write_dataset,
    write_jsonl,
)
from .errors import LikevoteError, SchemaMismatch, ValidationError
from .features import (
    MODEL_ORDER,
    FeatureMatrix,
    ModelKind,
    build_matrix,
    model_sample,
    read_labels,
    write_labels,
)
from .lasso import DEFAULT_GRID, FitConfig, ci_half_width, cross_validate, fit
from .metrics import evaluate, evaluate_folds

DEFAULT_MIN_LIKES = tuple(range(1, 11))
DEFAULT_PLC = (0.0, 0.5, 0.7, 0.8, 0.9)
PLOTTING = {"fit", "grid", "forecast", "replicate"}


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- helpers ------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError("empty list")
    return vals


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise UsageError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _clean(obj):
    """JSON-safe copy: NaN and infinities become null."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _write_json(obj, path):
    Path(path).write_text(json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n")


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp for reproducible runs
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch
           else dt.datetime.now(dt.timezone.utc))
    return now.replace(microsecond=0).isoformat()


def write_manifest(args, out: Path, inputs: dict):
    manifest = {
        "subcommand": args.command,
        "config": args.config,
        "inputs": {k: str(v) for k, v in inputs.items() if v is not None},
        "output": str(out),
        "seed": args.seed,
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "timestamp": _timestamp(),
        "version": __version__,
    }
    _write_json(manifest, out / "manifest.json")


def _out_dir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _plots(args):
    if args.no_plots:
        return None
    from . import plotting

    return plotting


def _dataset(args, study):
    if args.input is None:
        raise UsageError("--input is required")
    return read_dataset(args.input, study)


def _gen_config(args, study):
    from .synth import GenConfig

    return GenConfig.from_mapping(
        study.generator,
        seed=args.seed,
        n_respondents=getattr(args, "n", None),
        alignment=getattr(args, "alignment", None),
        age_skew=getattr(args, "age_skew", None),
        survey_signal=getattr(args, "survey_signal", None),
    )


# -- subcommands --------------------------------------------------------------


def cmd_synth(args, study, out):
    from .forecast import write_polls, write_shares
    from .synth import generate, generate_polls, generate_social

    gen = _gen_config(args, study)
    ds = generate(gen, study)
    write_dataset(ds, out / "dataset.jsonl")
    trace = generate_social(ds, seed=gen.seed)
    write_jsonl([p.to_dict() for p in trace.media_posts], out / "media_posts.jsonl")
    write_jsonl([{"tagger_id": a, "tagged_id": b} for a, b in trace.tags], out / "tags.jsonl")
    write_jsonl([{"liker_id": c.liker_id, "author_id": c.author_id, "post_id": c.post_id,
                  "on_politician_page": c.on_politician_page} for c in trace.comment_likes],
                out / "comment_likes.jsonl")
    polls, election = generate_polls(gen, study)
    write_polls(polls, study.party_space, out / "polls.csv")
    write_shares(election, study.party_space, out / "election.csv")
    _write_json(gen.to_dict(), out / "generator.json")
    return {}


def cmd_features(args, study, out):
    ds = _dataset(args, study)
    fm, y = build_matrix(model_sample(ds, args.model), args.model, study.survey)
    fm.to_csv(out / "features.csv")
    write_labels(fm.row_ids, y, study.party_space, out / "labels.csv")
    return {"input": args.input}


def _load_xy(args, study):
    src = Path(args.input)
    if src.is_dir():
        fm = FeatureMatrix.from_csv(src / "features.csv", args.model)
        ids, y = read_labels(src / "labels.csv", study.party_space)
        if ids != fm.row_ids:
            raise SchemaMismatch("features.csv and labels.csv list different respondents")
        return fm, y
    ds = read_dataset(src, study)
    return build_matrix(model_sample(ds, args.model), args.model, study.survey)


def _write_predictions(path, ids, gold, proba, ps):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["respondent_id", "gold", "predicted", *(f"p:{p}" for p in ps.parties)])
        for rid, g, row in zip(ids, gold, proba):
            w.writerow([rid, ps.parties[int(g)], ps.parties[int(np.argmax(row))],
                        *(repr(float(v)) for v in row)])


def cmd_fit(args, study, out):
    fm, y = _load_xy(args, study)
    ps = study.party_space
    K = len(ps)
    cv = cross_validate(fm, y, args.lambda_grid, k=args.folds, seed=args.seed, n_classes=K,
                        threads=args.threads)
    final = fit(fm, y, FitConfig(lam=cv.chosen_lambda), n_classes=K)
    final.save(out / "fit.json")
    with open(out / "cv.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "mean_accuracy", "ci_95", *(f"fold_{i}" for i in range(cv.k))])
        for lam, accs in zip(cv.grid, cv.fold_accuracies):
            w.writerow([repr(lam), repr(float(accs.mean())), repr(ci_half_width(accs)),
                        *(repr(float(a)) for a in accs)])
    report = evaluate_folds(cv.oof_proba, y, cv.folds, ps, cv.ci_95)
    summary = report.to_dict()
    summary.update(chosen_lambda=cv.chosen_lambda, included=final.included, total=final.total,
                   model=ModelKind(args.model).value)
    _write_json(summary, out / "report.json")
    _write_predictions(out / "predictions.csv", fm.row_ids, y, cv.oof_proba, ps)
    plotting = _plots(args)
    if plotting:
        plotting.plot_trace(final.objective_trace, out / "objective.png")
    return {"input": args.input}


def _read_predictions(path, ps):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["respondent_id"] or "predicted" not in rows[0]:
        raise SchemaMismatch(f"{path}: expected columns respondent_id,...,predicted")
    head = rows[0]
    body = rows[1:]
    ids = tuple(r[0] for r in body)
    pred = np.array([ps.index(r[head.index("predicted")]) for r in body], dtype=np.int64)
    gold = None
    if "gold" in head:
        gold = np.array([ps.index(r[head.index("gold")]) for r in body], dtype=np.int64)
    pcols = [f"p:{p}" for p in ps.parties]
    proba = None
    if all(c in head for c in pcols):
        idx = [head.index(c) for c in pcols]
        try:
            proba = np.array([[float(r[i]) for i in idx] for r in body])
        except ValueError as e:
            raise SchemaMismatch(f"{path}: {e}") from None
    return ids, pred, gold, proba


def cmd_eval(args, study, out):
    ps = study.party_space
    ids, pred, gold, proba = _read_predictions(args.input, ps)
    if args.gold is not None:
        gids, gold = read_labels(args.gold, ps)
        lookup = dict(zip(gids, gold))
        missing = [i for i in ids if i not in lookup]
        if missing:
            raise SchemaMismatch(f"{len(missing)} predicted respondents have no gold label")
        gold = np.array([lookup[i] for i in ids], dtype=np.int64)
    if gold is None:
        raise UsageError("gold labels needed: pass --gold or include a gold column")
    report = evaluate(pred, gold, proba, ps)
    _write_json(report.to_dict(), out / "report.json")
    return {"input": args.input, "gold": args.gold}


def cmd_grid(args, study, out):
    from .rules import sweep_grid, write_grid_csv, write_grid_matrix

    ds = _dataset(args, study)
    cells = sweep_grid(ds, args.min_likes, args.plc)
    write_grid_csv(cells, out / "grid.csv")
    write_grid_matrix(cells, out / "grid_matrix.csv")
    plotting = _plots(args)
    if plotting:
        plotting.plot_grid(cells, out / "grid.png")
    return {"input": args.input}


def like_vectors(ds) -> dict[str, np.ndarray]:
    """Normalised post-like vector for every respondent with at least one political like."""
    ps = ds.party_space
    db = {}
    for r in ds:
        v = like_counts(r, ps).as_array().astype(float)
        if v.sum() > 0:
            db[r.respondent_id] = v / v.sum()
    return db


def cmd_propagate(args, study, out):
    from .propagation import (
        CommentLike,
        MediaPost,
        propagate_comment_likes,
        propagate_tags,
        score_posts,
        select_political,
    )

    ds = _dataset(args, study)
    social = Path(args.social) if args.social else Path(args.input).parent
    try:
        posts = [MediaPost.from_dict(d) for d in read_jsonl(social / "media_posts.jsonl")]
        tags = [(d["tagger_id"], d["tagged_id"]) for d in read_jsonl(social / "tags.jsonl")]
        clikes = [CommentLike(d["liker_id"], d["author_id"], d["post_id"],
                              bool(d.get("on_politician_page", False)))
                  for d in read_jsonl(social / "comment_likes.jsonl")]
    except (KeyError, TypeError, json.JSONDecodeError) as e:
        raise SchemaMismatch(f"malformed social trace: {e!r}") from None
    db = like_vectors(ds)
    scores = score_posts(posts, db)
    political = select_political(scores)
    state = propagate_tags(tags, db)
    state = propagate_comment_likes(clikes, political, db, state)
    ps = study.party_space
    with open(out / "post_scores.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["post_id", "score", "political"])
        for pid in sorted(scores):
            w.writerow([pid, repr(scores[pid]), int(pid in political)])
    (out / "political_posts.txt").write_text("".join(f"{p}\n" for p in sorted(political)))
    with open(out / "propagation.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["respondent_id", *ps.parties])
        for uid in state.users():
            w.writerow([uid, *(repr(float(v)) for v in state[uid])])
    return {"input": args.input, "social": str(social)}


def cmd_nonresponse(args, study, out):
    from .nonresponse import permutation_skew, survey_features, write_skew_table

    ds = _dataset(args, study)
    subsamples = {
        "with_likes": filter_dataset(ds, HasAnyLikes()),
        "model_sample": model_sample(ds, ModelKind.ALL_LIKES),
        "min_likes_7": model_sample(ds, ModelKind.ALL_LIKES_MIN7),
    }
    feats = args.features.split(",") if args.features else survey_features(study.survey)
    reports = {}
    for name, sub in subsamples.items():
        reports[name] = [permutation_skew(ds, sub, f, n_perm=args.n_perm, seed=args.seed)
                         for f in feats]
    write_skew_table(reports, out / "skew.csv")
    return {"input": args.input}


def cmd_forecast(args, study, out):
    from .forecast import (
        fit_weights,
        forecast,
        mae,
        poll_week_shares,
        raw_count_shares,
        read_polls,
        read_shares,
        window_counts,
        write_shares,
    )

    ds = _dataset(args, study)
    ps = study.party_space
    polls = read_polls(args.polls, ps)
    fb = [poll_week_shares(ds, p) for p in polls]
    wf = fit_weights(fb, polls)
    users = window_counts(ds, *ds.window)
    raw = raw_count_shares(users)
    weighted = forecast(users, wf.weights)
    actual = read_shares(args.actual, ps) if args.actual else None
    extra = [weighted] + ([actual] if actual is not None else [])
    header = ["party", "raw", "weighted"] + (["actual"] if actual is not None else [])
    write_shares(raw, ps, out / "forecast.csv", header=header, extra=extra)
    write_shares(wf.weights, ps, out / "weights.csv", header=("party", "weight"))
    summary = {
        "objective": wf.objective,
        "start_objective": wf.start_objective,
        "iterations": wf.iterations,
        "degenerate": wf.degenerate,
        "n_users": len(users),
        "mae_raw": mae(raw, actual) if actual is not None else None,
        "mae_weighted": mae(weighted, actual) if actual is not None else None,
    }
    _write_json(summary, out / "summary.json")
    plotting = _plots(args)
    if plotting:
        plotting.plot_forecast(ps.parties, raw, weighted, actual, out / "forecast.png")
    return {"input": args.input, "polls": args.polls, "actual": args.actual}


def cmd_replicate(args, study, out):
    from .experiment import format_table, ordering_holds, replicate, write_table_csv

    gen = _gen_config(args, study)
    runs = replicate(gen, study, args.lambda_grid, args.folds, args.threads)
    text = format_table(runs)
    (out / "table.txt").write_text(text)
    write_table_csv(runs, out / "table.csv")
    reports = {r.kind.value: dict(r.report.to_dict(), chosen_lambda=r.cv.chosen_lambda,
                                  included=r.final.included, total=r.final.total)
               for r in runs}
    _write_json({"generator": gen.to_dict(), "models": reports,
                 "ordering": ordering_holds(runs)}, out / "reports.json")
    plotting = _plots(args)
    if plotting:
        plotting.plot_replicate(runs, out / "replicate.png")
    sys.stdout.write(text)
    return {}


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="likevote", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"likevote {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def command(name, func, help, inputs=True):
        c = sub.add_parser(name, help=help)
        c.set_defaults(func=func)
        c.add_argument("--config", help="study configuration (JSON)")
        c.add_argument("--seed", type=int, default=0)
        c.add_argument("--output", required=True, help="output directory")
        c.add_argument("--threads", type=int, default=1)
        c.add_argument("--no-plots", action="store_true", help="skip PNG figures")
        if inputs:
            c.add_argument("--input", required=True)
        return c

    def generator_flags(c, n_default=None):
        c.add_argument("--n", type=int, default=n_default, help="number of respondents")
        c.add_argument("--alignment", type=float)
        c.add_argument("--survey-signal", type=float)
        c.add_argument("--age-skew", type=float)

    def model_flag(c):
        c.add_argument("--model", default=ModelKind.ALL_LIKES.value,
                       choices=[m.value for m in MODEL_ORDER])

    def cv_flags(c):
        c.add_argument("--lambda-grid", type=_floats, default=list(DEFAULT_GRID))
        c.add_argument("--folds", type=int, default=10)

    generator_flags(command("synth", cmd_synth, "generate a synthetic study", inputs=False))
    model_flag(command("features", cmd_features, "build one model's feature matrix"))
    c = command("fit", cmd_fit, "cross-validate and fit the lasso model")
    model_flag(c)
    cv_flags(c)
    c = command("eval", cmd_eval, "score a predictions CSV")
    c.add_argument("--gold", help="labels CSV (respondent_id,vote_intent)")
    c = command("grid", cmd_grid, "min-likes by party-like-cap rule grid")
    c.add_argument("--min-likes", type=_ints, default=list(DEFAULT_MIN_LIKES))
    c.add_argument("--plc", type=_floats, default=list(DEFAULT_PLC))
    c = command("propagate", cmd_propagate, "score media posts and propagate tags")
    c.add_argument("--social", help="directory with media_posts/tags/comment_likes JSONL")
    c = command("nonresponse", cmd_nonresponse, "chi-squared permutation skew table")
    c.add_argument("--n-perm", type=int, default=10_000)
    c.add_argument("--features", help="comma-separated survey items (default: all)")
    c = command("forecast", cmd_forecast, "poll-weighted vote share forecast")
    c.add_argument("--polls", required=True)
    c.add_argument("--actual", help="actual result CSV (party,share) for MAE")
    c = command("replicate", cmd_replicate, "five-model comparison on planted data", inputs=False)
    generator_flags(c)
    cv_flags(c)
    return p


def _fail(exc: Exception, code: int) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        if getattr(args, "folds", 2) < 2:
            raise UsageError("--folds must be at least 2")
        if getattr(args, "n_perm", 1) < 1:
            raise UsageError("--n-perm must be positive")
        if not args.no_plots and args.command in PLOTTING:
            try:
                import matplotlib  # noqa: F401
            except ImportError:
                raise UsageError("matplotlib is not installed; install the 'plots' extra "
                                 "or pass --no-plots") from None
        study = load_config(args.config)
        out = _out_dir(args)
        inputs = args.func(args, study, out)
        write_manifest(args, out, inputs)
    except ValidationError as e:
        return _fail(e, 1)
    except FileNotFoundError as e:
        return _fail(e, 1)
    except LikevoteError as e:
        return _fail(e, 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
