"""Aggregate vote-share forecasts from most-liked-party counts, with
optional per-party weights fitted against two opinion polls."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import N_PARTIES, Dataset, Kind, PartyCountVector, PartySpace
from .errors import (
    EmptyUserList,
    LikevoteError,
    SchemaMismatch,
    ValidationError,
    ZeroTotal,
    ZeroWeightMass,
)

WEEK = 7 * 24 * 3600


@dataclass(frozen=True)
class PollObservation:
    date: dt.date
    shares: np.ndarray


@dataclass
class WeightFit:
    weights: np.ndarray
    objective: float
    start_objective: float
    iterations: int
    degenerate: bool = False


def _check_shares(v, what="share vector"):
    v = np.asarray(v, dtype=float)
    if v.shape != (N_PARTIES,) or np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
        raise ValidationError(f"{what} must hold {N_PARTIES} nonnegative shares summing to 1")
    return v


def _as_counts(users) -> np.ndarray:
    rows = [u.as_array() if isinstance(u, PartyCountVector) else np.asarray(u) for u in users]
    if not rows:
        raise EmptyUserList("no users to count")
    return np.vstack(rows)


def raw_count_shares(users) -> np.ndarray:
    """One vote per user for their most-liked party (ties to the lowest index)."""
    counts = _as_counts(users)
    if np.any(counts.sum(axis=1) < 1):
        raise ZeroTotal("every user needs at least one like")
    votes = np.bincount(np.argmax(counts, axis=1), minlength=N_PARTIES)
    return votes / len(counts)


def mae(pred, actual) -> float:
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if pred.shape != actual.shape:
        raise SchemaMismatch("share vectors differ in length")
    return float(np.mean(np.abs(pred - actual)))


def _normalize(x):
    return x / x.sum()


def weighting_objective(w, fb, polls) -> float:
    """Sum over polls of squared residuals between reweighted counts and the poll."""
    total = 0.0
    for f, p in zip(fb, polls):
        s = w * f
        total += float(np.sum((_normalize(s) - p) ** 2))
    return total


def _gradient(w, fb, polls):
    g = np.zeros_like(w)
    for f, p in zip(fb, polls):
        S = float(w @ f)
        q = w * f / S
        r = q - p
        g += 2.0 * f / S * (r - r @ q)
    return g


def fit_weights(fb_shares: Sequence, polls: Sequence[PollObservation], tol: float = 1e-10,
                max_iters: int = 200_000) -> WeightFit:
    """Nonnegative per-party weights minimising the two-poll RSS.

    Projected gradient descent with backtracking from all-ones, stopping when
    a step improves the objective by less than ``tol`` relative. ``degenerate``
    is set when a poll gives a party support that the matching Facebook
    shares cannot reach because the party has zero count there.
    """
    if len(polls) != 2 or len(fb_shares) != 2:
        raise ValidationError("exactly two polls and two Facebook share vectors are required")
    if polls[0].date == polls[1].date:
        raise ValidationError("poll dates must differ")
    fb = [_check_shares(f, "Facebook shares") for f in fb_shares]
    ps = [_check_shares(p.shares, "poll shares") for p in polls]
    degenerate = any(np.any((f == 0) & (p > 0)) for f, p in zip(fb, ps))

    w = np.ones(N_PARTIES)
    obj = weighting_objective(w, fb, ps)
    start = obj
    eta = 1.0
    it = 0
    for it in range(1, max_iters + 1):
        g = _gradient(w, fb, ps)
        while True:
            w_new = np.maximum(w - eta * g, 0.0)
            if not all(w_new @ f > 0 for f in fb):
                eta *= 0.5
                continue
            obj_new = weighting_objective(w_new, fb, ps)
            if obj_new <= obj - 1e-4 * float(g @ (w - w_new)) or eta < 1e-20:
                break
            eta *= 0.5
        # weights are scale-free; renormalise to mean 1 to keep steps comparable
        w_new = w_new / w_new.mean()
        # relative test, so exactly solvable problems keep going towards zero
        done = abs(obj - obj_new) <= tol * obj or obj_new <= 1e-24
        improved = obj_new <= obj
        if improved:
            w, obj = w_new, obj_new
        if done or not improved:
            break
        eta *= 2.0
    return WeightFit(weights=w, objective=obj, start_objective=start, iterations=it,
                     degenerate=bool(degenerate))


def forecast(users, w) -> np.ndarray:
    """Reweighted raw count shares, renormalised to sum to one."""
    w = np.asarray(w, dtype=float)
    if w.shape != (N_PARTIES,) or np.any(w < 0):
        raise ValidationError("weights must be 9 nonnegative reals")
    raw = raw_count_shares(users)
    s = w * raw
    if s.sum() <= 0:
        raise ZeroWeightMass("weights put no mass on any counted party")
    return _normalize(s)


def window_counts(ds: Dataset, start: int, end: int, kinds=(Kind.POST_LIKE,)) -> list[np.ndarray]:
    """Per-user like counts restricted to events in [start, end); users with none are dropped."""
    ps = ds.party_space
    kinds = set(kinds)
    out = []
    for r in ds.respondents:
        c = np.zeros(N_PARTIES, dtype=np.int64)
        for e in r.like_history:
            if e.kind in kinds and start <= e.timestamp < end:
                c[ps.index(e.page_party)] += 1
        if c.sum() > 0:
            out.append(c)
    return out


def to_epoch(day: dt.date) -> int:
    return int(dt.datetime(day.year, day.month, day.day, tzinfo=dt.timezone.utc).timestamp())


def poll_week_shares(ds: Dataset, poll: PollObservation) -> np.ndarray:
    """Raw count shares over the seven days leading up to the poll date."""
    end = to_epoch(poll.date)
    users = window_counts(ds, end - WEEK, end)
    if not users:
        raise EmptyUserList(f"no likes in the week before {poll.date}")
    return raw_count_shares(users)


# -- CSV ----------------------------------------------------------------------


def read_polls(path, party_space: PartySpace) -> list[PollObservation]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["date", *party_space.parties]:
        raise SchemaMismatch(f"{path}: expected header date,{','.join(party_space.parties)}")
    polls = []
    for r in rows[1:]:
        try:
            polls.append(PollObservation(dt.date.fromisoformat(r[0]),
                                         _check_shares([float(v) for v in r[1:]], "poll shares")))
        except ValueError as e:
            if isinstance(e, LikevoteError):
                raise
            raise SchemaMismatch(f"{path}: {e}") from None
    return polls


def write_polls(polls: Sequence[PollObservation], party_space: PartySpace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *party_space.parties])
        for p in polls:
            w.writerow([p.date.isoformat(), *(repr(float(s)) for s in p.shares)])


def read_shares(path, party_space: PartySpace) -> np.ndarray:
    """Single share vector stored as ``party,share`` rows."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["party", "share"]:
        raise SchemaMismatch(f"{path}: expected header party,share")
    shares = np.zeros(N_PARTIES)
    for party, share in rows[1:]:
        shares[party_space.index(party)] = float(share)
    return _check_shares(shares)


def write_shares(shares, party_space: PartySpace, path, header=("party", "share"), extra=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for i, p in enumerate(party_space.parties):
            row = [p, repr(float(shares[i]))]
            if extra is not None:
                row.extend(repr(float(col[i])) for col in extra)
            w.writerow(row)
