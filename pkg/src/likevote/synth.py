"""Seeded synthetic respondents, like histories, social traces and polls.

Each respondent has a true party. Likes go to that party with probability
``alignment`` and uniformly to one of the other eight otherwise. Survey
answers lean towards party-specific positions with strength
``survey_signal``. Younger respondents are ``1 + age_skew`` times as likely
to be active on political pages, and parties differ in their share of young
voters, so a positive ``age_skew`` biases raw like counts by party.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Mapping

import numpy as np

from .core import (
    N_PARTIES,
    Dataset,
    Kind,
    LikeEvent,
    Respondent,
    StudyConfig,
    SurveyResponse,
    default_config,
)
from .errors import ConfigError
from .forecast import PollObservation
from .propagation import CommentLike, MediaPost

DEFAULT_PRIORS = (0.25, 0.08, 0.05, 0.04, 0.08, 0.21, 0.19, 0.07, 0.03)
DEFAULT_YOUNG = (0.25, 0.55, 0.45, 0.35, 0.40, 0.30, 0.35, 0.40, 0.30)
YOUNG_BANDS = ("18-29", "30-44")
OLD_BANDS = ("45-59", "60+")
DAY = 24 * 3600


@dataclass(frozen=True)
class GenConfig:
    n_respondents: int = 2000
    seed: int = 0
    alignment: float = 0.85
    likes_median: float = 3.0
    likes_sigma: float = 1.2
    max_likes: int = 2000
    survey_signal: float = 0.1
    age_skew: float = 0.0
    party_priors: tuple[float, ...] = DEFAULT_PRIORS
    young_share: tuple[float, ...] = DEFAULT_YOUNG
    p_active: float = 0.35
    p_no_vote: float = 0.05
    comment_like_rate: float = 0.2

    def __post_init__(self):
        priors = tuple(float(p) for p in self.party_priors)
        young = tuple(float(p) for p in self.young_share)
        object.__setattr__(self, "party_priors", priors)
        object.__setattr__(self, "young_share", young)
        if self.n_respondents < 1:
            raise ConfigError("n_respondents must be positive")
        if not 1 / N_PARTIES - 1e-12 <= self.alignment <= 1.0:
            raise ConfigError("alignment must lie in [1/9, 1]")
        if len(priors) != N_PARTIES or min(priors) < 0 or abs(sum(priors) - 1) > 1e-9:
            raise ConfigError("party_priors must be 9 nonnegative reals summing to 1")
        if len(young) != N_PARTIES or not all(0 <= y <= 1 for y in young):
            raise ConfigError("young_share must be 9 reals in [0, 1]")
        if not 0 <= self.survey_signal <= 1:
            raise ConfigError("survey_signal must lie in [0, 1]")
        if self.age_skew < 0:
            raise ConfigError("age_skew must be nonnegative")
        if self.likes_median < 1 or self.likes_sigma < 0 or self.max_likes < 1:
            raise ConfigError("bad like-count distribution parameters")
        for name in ("p_active", "p_no_vote"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.comment_like_rate < 0:
            raise ConfigError("comment_like_rate must be nonnegative")

    @classmethod
    def from_mapping(cls, d: Mapping, **overrides) -> "GenConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown generator keys: {sorted(unknown)}")
        kw = dict(d)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**kw)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["party_priors"] = list(self.party_priors)
        d["young_share"] = list(self.young_share)
        return d


def _structure(rng, study: StudyConfig):
    """Party-level positions on survey items, drawn once per dataset."""
    cat_effects = {
        name: rng.normal(size=(N_PARTIES, len(cats)))
        for name, cats in study.survey.categorical.items()
        if name != "age_band"
    }
    positions = rng.uniform(-1, 1, size=(N_PARTIES, len(study.survey.opinion_items)))
    return cat_effects, positions


def _ordinal(latent, scale):
    lo, hi = scale
    k = hi - lo + 1
    cuts = np.linspace(-1.5, 1.5, k - 1) if k > 2 else np.array([0.0])
    return lo + int(np.searchsorted(cuts, latent))


def _other_party(rng, party, n):
    # uniform over the eight parties that are not ``party``
    draws = rng.integers(0, N_PARTIES - 1, size=n)
    return draws + (draws >= party)


def generate(cfg: GenConfig, study: StudyConfig | None = None) -> Dataset:
    """Synthetic survey respondents with like histories; deterministic in ``cfg.seed``."""
    study = default_config() if study is None else study
    schema = study.survey
    ps = study.party_space
    if "age_band" not in schema.categorical or set(schema.categorical["age_band"]) != set(
        YOUNG_BANDS + OLD_BANDS
    ):
        raise ConfigError(f"generator needs age bands {YOUNG_BANDS + OLD_BANDS}")
    rng = np.random.default_rng(cfg.seed)
    cat_effects, positions = _structure(rng, study)
    priors = np.array(cfg.party_priors)
    young_share = np.array(cfg.young_share)
    mean_boost = 1 + cfg.age_skew * float(priors @ young_share)
    start, end = study.window
    signal = cfg.survey_signal

    respondents = []
    width = len(str(cfg.n_respondents))
    for i in range(cfg.n_respondents):
        rid = f"R{i + 1:0{width}d}"
        party = int(rng.choice(N_PARTIES, p=priors))
        young = bool(rng.random() < young_share[party])
        age_band = str(rng.choice(YOUNG_BANDS if young else OLD_BANDS))
        cats = {}
        for name, values in schema.categorical.items():
            if name == "age_band":
                continue
            logits = 2.0 * signal * cat_effects[name][party]
            p = np.exp(logits - logits.max())
            cats[name] = str(values[int(rng.choice(len(values), p=p / p.sum()))])
        latent = 3.0 * signal * positions[party] + rng.normal(size=positions.shape[1])
        opinions = {
            item: _ordinal(latent[j], schema.scale) for j, item in enumerate(schema.opinion_items)
        }
        vote = None if rng.random() < cfg.p_no_vote else ps.parties[party]
        survey = SurveyResponse(
            gender=cats.get("gender", "Male"),
            age_band=age_band,
            geography=cats.get("geography", ""),
            education=cats.get("education", ""),
            opinions=opinions,
            vote_intent=vote,
        )

        boost = (1 + cfg.age_skew) if young else 1.0
        active = rng.random() < min(1.0, cfg.p_active * boost / mean_boost)
        events = []
        if active:
            n_likes = int(min(cfg.max_likes, max(1, math.ceil(
                rng.lognormal(math.log(cfg.likes_median), cfg.likes_sigma)))))
            n_comment = int(rng.poisson(cfg.comment_like_rate * n_likes))
            for kind, n in ((Kind.POST_LIKE, n_likes), (Kind.COMMENT_LIKE, n_comment)):
                if n == 0:
                    continue
                on_party = rng.random(n) < cfg.alignment
                targets = np.where(on_party, party, _other_party(rng, party, n))
                times = rng.integers(start, end + 1, size=n)
                events.extend(
                    (int(t), kind, ps.parties[int(p)]) for t, p in zip(times, targets)
                )
        events.sort(key=lambda e: (e[0], e[1] is not Kind.POST_LIKE, e[2]))
        history = tuple(LikeEvent(rid, p, t, k) for t, k, p in events)
        respondents.append(Respondent(rid, survey, history))
    return Dataset(tuple(respondents), ps, study.window)


# -- social traces ------------------------------------------------------------


@dataclass
class SocialTrace:
    media_posts: list[MediaPost]
    tags: list[tuple[str, str]]
    comment_likes: list[CommentLike]
    political_truth: set[str] = field(default_factory=set)


def generate_social(ds: Dataset, seed: int = 0, n_posts: int = 200, n_tags: int = 500,
                    n_comment_likes: int = 500, p_political: float = 0.25,
                    homophily: float = 0.7) -> SocialTrace:
    """Media posts, tag edges and comment-likes among active respondents.

    Political posts draw likers from one party's supporters and commenters
    from another's; other posts draw both from the same mixed pool.
    """
    rng = np.random.default_rng(seed)
    ps = ds.party_space
    users, parties = [], []
    for r in ds:
        counts = [0] * N_PARTIES
        for e in r.like_history:
            if e.kind is Kind.POST_LIKE:
                counts[ps.index(e.page_party)] += 1
        if sum(counts):
            users.append(r.respondent_id)
            parties.append(int(np.argmax(counts)))
    if len(users) < 2:
        raise ConfigError("need at least two active respondents for social traces")
    users_arr = np.array(users)
    parties = np.array(parties)
    by_party = [np.flatnonzero(parties == p) for p in range(N_PARTIES)]
    populated = [p for p in range(N_PARTIES) if len(by_party[p])]

    def pick(pool, k):
        return set(users_arr[rng.choice(pool, size=min(k, len(pool)), replace=False)].tolist())

    posts, truth = [], set()
    for j in range(n_posts):
        pid = f"M{j + 1:04d}"
        k_like, k_comm = int(rng.integers(5, 30)), int(rng.integers(3, 15))
        if rng.random() < p_political and len(populated) >= 2:
            a, b = rng.choice(populated, size=2, replace=False)
            likers, commenters = pick(by_party[a], k_like), pick(by_party[b], k_comm)
            truth.add(pid)
        else:
            pool = np.arange(len(users))
            likers, commenters = pick(pool, k_like), pick(pool, k_comm)
        posts.append(MediaPost(pid, frozenset(likers), frozenset(commenters)))

    def partner(i):
        same = by_party[parties[i]]
        if rng.random() < homophily and len(same) > 1:
            return int(rng.choice(same))
        return int(rng.integers(len(users)))

    tags = []
    for _ in range(n_tags):
        i = int(rng.integers(len(users)))
        tags.append((users[i], users[partner(i)]))
    clikes = []
    for _ in range(n_comment_likes):
        i = int(rng.integers(len(users)))
        on_page = bool(rng.random() < 0.5)
        post = f"page-{int(rng.integers(1, 100))}" if on_page else posts[int(rng.integers(n_posts))].post_id
        clikes.append(CommentLike(users[i], users[partner(i)], post, on_page))
    return SocialTrace(posts, tags, clikes, truth)


# -- polls --------------------------------------------------------------------


def generate_polls(cfg: GenConfig, study: StudyConfig | None = None, seed: int | None = None,
                   concentration: float = 20_000.0):
    """Two opinion polls at least a year before the election, and the election result.

    Polls and the election are noisy draws around ``party_priors`` (the
    population truth that the age-skewed like counts misrepresent).
    """
    study = default_config() if study is None else study
    rng = np.random.default_rng(cfg.seed + 1 if seed is None else seed)
    start, end = study.window
    first = start + 8 * DAY
    last = end - 366 * DAY
    if last <= first:
        raise ConfigError("window too short to place polls a year before the election")
    days = sorted(rng.choice(np.arange(first // DAY, last // DAY), size=2, replace=False))
    priors = np.array(cfg.party_priors)
    polls = []
    for d in days:
        shares = rng.dirichlet(priors * concentration + 1e-9)
        date = dt.datetime.fromtimestamp(int(d) * DAY, dt.timezone.utc).date()
        polls.append(PollObservation(date, shares / shares.sum()))
    election = rng.dirichlet(priors * concentration * 5 + 1e-9)
    return polls, election / election.sum()
