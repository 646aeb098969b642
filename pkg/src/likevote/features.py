"""Feature matrices for the baseline survey model and the four like-based models."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    N_PARTIES,
    Dataset,
    HasVoteIntent,
    Kind,
    MinPoliticalLikes,
    PartyCountVector,
    PartySpace,
    Respondent,
    SurveyResponse,
    SurveySchema,
    filter_dataset,
    like_counts,
    vote_labels,
)
from .errors import (
    FeatureError,
    LikevoteError,
    NoPoliticalLikes,
    SchemaMismatch,
    UnknownCategory,
    ZeroTotal,
)

MIN_LIKES_MODEL = 7


class ModelKind(str, Enum):
    BASELINE = "baseline"
    SINGLE_LIKE = "single_like"
    ALL_LIKES = "all_likes"
    COMBINED = "combined"
    ALL_LIKES_MIN7 = "all_likes_min7"


MODEL_ORDER = (
    ModelKind.BASELINE,
    ModelKind.SINGLE_LIKE,
    ModelKind.ALL_LIKES,
    ModelKind.COMBINED,
    ModelKind.ALL_LIKES_MIN7,
)


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    columns: tuple[str, ...]
    model_kind: ModelKind
    row_ids: tuple[str, ...]

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape != (len(self.row_ids), len(self.columns)):
            raise SchemaMismatch(
                f"values shape {self.values.shape} does not match "
                f"{len(self.row_ids)} rows x {len(self.columns)} columns"
            )
        if len(set(self.columns)) != len(self.columns):
            raise SchemaMismatch("duplicate column names")

    @property
    def shape(self):
        return self.values.shape

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["respondent_id", *self.columns])
            for rid, row in zip(self.row_ids, self.values):
                w.writerow([rid, *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path: str | Path, model_kind: ModelKind | str) -> "FeatureMatrix":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0] != "respondent_id":
            raise SchemaMismatch(f"{path}: expected a header starting with respondent_id")
        cols = tuple(rows[0][1:])
        try:
            values = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=float)
        except ValueError as e:
            raise SchemaMismatch(f"{path}: {e}") from None
        values = values.reshape(len(rows) - 1, len(cols))
        return cls(values, cols, ModelKind(model_kind), tuple(r[0] for r in rows[1:]))


def normalize_likes(v: PartyCountVector | Sequence[int]) -> np.ndarray:
    """Per-party shares of a user's likes; sums to one."""
    counts = v.as_array() if isinstance(v, PartyCountVector) else np.asarray(v)
    total = counts.sum()
    if total <= 0:
        raise ZeroTotal("cannot normalize a like vector with zero total")
    return counts / total


def single_latest_like(r: Respondent, party_space: PartySpace) -> np.ndarray:
    """One-hot vector at the party of the most recent post like.

    Among events sharing the latest timestamp, the one appearing last in the
    (sorted) history wins.
    """
    latest = None
    for e in r.like_history:
        if e.kind is Kind.POST_LIKE and (latest is None or e.timestamp >= latest.timestamp):
            latest = e
    if latest is None:
        raise NoPoliticalLikes(f"respondent {r.respondent_id!r} has no post likes")
    out = np.zeros(N_PARTIES)
    out[party_space.index(latest.page_party)] = 1.0
    return out


def survey_columns(schema: SurveySchema) -> tuple[str, ...]:
    cols = []
    for name, cats in schema.categorical.items():
        cols.extend(f"survey:{name}={c}" for c in cats)
    for item in schema.opinion_items:
        if schema.ordinal_encoding == "centered":
            cols.append(f"survey:{item}")
        else:
            cols.extend(f"survey:{item}={lvl}" for lvl in schema.levels)
    return tuple(cols)


def encode_survey(s: SurveyResponse, schema: SurveySchema) -> np.ndarray:
    """Encode one survey response as a row matching ``survey_columns(schema)``.

    Categorical items become one-hot groups. Ordinal opinion items are either
    a single column centred on the scale midpoint or a one-hot group over the
    scale levels, depending on ``schema.ordinal_encoding``.
    """
    row = []
    for name, cats in schema.categorical.items():
        v = s.categorical(name)
        if v not in cats:
            raise UnknownCategory(f"{name}={v!r} not in {list(cats)}")
        row.extend(1.0 if c == v else 0.0 for c in cats)
    lo, hi = schema.scale
    mid = (lo + hi) / 2
    for item in schema.opinion_items:
        try:
            v = s.opinions[item]
        except KeyError:
            raise SchemaMismatch(f"missing answer for {item!r}") from None
        if not lo <= v <= hi:
            raise UnknownCategory(f"{item}={v!r} outside [{lo}, {hi}]")
        if schema.ordinal_encoding == "centered":
            row.append(float(v) - mid)
        else:
            row.extend(1.0 if lvl == v else 0.0 for lvl in schema.levels)
    return np.array(row)


def like_columns(prefix: str, party_space: PartySpace) -> tuple[str, ...]:
    return tuple(f"{prefix}:{p}" for p in party_space.parties)


def required_filters(kind: ModelKind) -> list:
    rules = [HasVoteIntent(), MinPoliticalLikes(1)]
    if ModelKind(kind) is ModelKind.ALL_LIKES_MIN7:
        rules.append(MinPoliticalLikes(MIN_LIKES_MODEL))
    return rules


def model_sample(ds: Dataset, kind: ModelKind) -> Dataset:
    """Apply the respondent filters a model kind requires."""
    for rule in required_filters(kind):
        ds = filter_dataset(ds, rule)
    return ds


def _rows(ds: Dataset, fn) -> np.ndarray:
    out = []
    for r in ds.respondents:
        try:
            out.append(fn(r))
        except LikevoteError as e:
            raise FeatureError(r.respondent_id, e) from e
    return np.array(out, dtype=float)


def build_matrix(
    ds: Dataset, kind: ModelKind | str, schema: SurveySchema | None = None
) -> tuple[FeatureMatrix, np.ndarray]:
    """Feature matrix and integer party labels for one model specification.

    Every respondent must already pass ``required_filters(kind)``; use
    ``model_sample`` first.
    """
    kind = ModelKind(kind)
    ps = ds.party_space
    for r in ds.respondents:
        for rule in required_filters(kind):
            if not rule(r, ps):
                raise FeatureError(r.respondent_id, f"fails filter {rule} required by {kind.value}")
    n = len(ds)

    def survey_block():
        if schema is None:
            raise SchemaMismatch(f"{kind.value} features need a survey schema")
        vals = _rows(ds, lambda r: encode_survey(r.survey, schema))
        return vals.reshape(n, -1), survey_columns(schema)

    def shares_block():
        vals = _rows(ds, lambda r: normalize_likes(like_counts(r, ps)))
        return vals.reshape(n, N_PARTIES), like_columns("like_share", ps)

    if kind is ModelKind.BASELINE:
        values, cols = survey_block()
    elif kind is ModelKind.SINGLE_LIKE:
        values = _rows(ds, lambda r: single_latest_like(r, ps)).reshape(n, N_PARTIES)
        cols = like_columns("latest_like", ps)
    elif kind in (ModelKind.ALL_LIKES, ModelKind.ALL_LIKES_MIN7):
        values, cols = shares_block()
    else:
        sv, sc = survey_block()
        lv, lc = shares_block()
        values, cols = np.hstack([sv, lv]), sc + lc
    fm = FeatureMatrix(values, cols, kind, tuple(ds.ids))
    return fm, vote_labels(ds)


def write_labels(row_ids: Sequence[str], labels: np.ndarray, party_space: PartySpace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["respondent_id", "vote_intent"])
        for rid, y in zip(row_ids, labels):
            w.writerow([rid, party_space.parties[int(y)]])


def read_labels(path, party_space: PartySpace) -> tuple[tuple[str, ...], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["respondent_id", "vote_intent"]:
        raise SchemaMismatch(f"{path}: expected header respondent_id,vote_intent")
    ids = tuple(r[0] for r in rows[1:])
    return ids, np.array([party_space.index(r[1]) for r in rows[1:]], dtype=np.int64)
