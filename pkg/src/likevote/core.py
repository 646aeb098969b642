"""Domain vocabulary: parties, survey answers, like events, datasets.

Everything here is immutable. Party identities and the survey schema come
from a config document (see ``StudyConfig``) rather than being hard-coded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, SchemaMismatch, UnknownCategory, ValidationError

N_PARTIES = 9


class Bloc(str, Enum):
    LEFT = "Left"
    RIGHT = "Right"


class Kind(str, Enum):
    """Engagement kinds. Replies and reply-likes are folded into COMMENT_LIKE."""

    POST_LIKE = "PostLike"
    COMMENT_LIKE = "CommentLike"
    TAG_MADE = "TagMade"
    TAG_RECEIVED = "TagReceived"


POLITICAL = frozenset({Kind.POST_LIKE})


@dataclass(frozen=True)
class PartySpace:
    parties: tuple[str, ...]
    bloc_of: Mapping[str, Bloc]

    def __post_init__(self):
        parties = tuple(self.parties)
        object.__setattr__(self, "parties", parties)
        if len(parties) != N_PARTIES:
            raise ConfigError(f"expected {N_PARTIES} parties, got {len(parties)}")
        if len(set(parties)) != len(parties):
            raise ConfigError("party identifiers must be unique")
        blocs = {}
        for p in parties:
            if p not in self.bloc_of:
                raise ConfigError(f"party {p!r} has no bloc assignment")
            blocs[p] = Bloc(self.bloc_of[p])
        extra = set(self.bloc_of) - set(parties)
        if extra:
            raise ConfigError(f"bloc mapping names unknown parties: {sorted(extra)}")
        object.__setattr__(self, "bloc_of", blocs)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(parties)})

    def __hash__(self):
        return hash(self.parties)

    def __len__(self):
        return len(self.parties)

    def index(self, party: str) -> int:
        try:
            return self._index[party]
        except KeyError:
            raise UnknownCategory(f"unknown party {party!r}") from None

    def __contains__(self, party) -> bool:
        return party in self._index

    def right_mask(self) -> np.ndarray:
        """Boolean vector, True where the party belongs to the Right bloc."""
        return np.array([self.bloc_of[p] is Bloc.RIGHT for p in self.parties])

    def to_dict(self) -> dict:
        return {
            "parties": list(self.parties),
            "blocs": {p: self.bloc_of[p].value for p in self.parties},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PartySpace":
        try:
            return cls(tuple(d["parties"]), dict(d["blocs"]))
        except KeyError as e:
            raise ConfigError(f"party space missing key {e}") from None
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e)) from None


@dataclass(frozen=True)
class SurveySchema:
    """Closed category sets for the four sociodemographic items plus the
    ordinal opinion items and their common scale."""

    categorical: Mapping[str, tuple[str, ...]]
    opinion_items: tuple[str, ...]
    scale: tuple[int, int] = (1, 5)
    ordinal_encoding: str = "centered"

    def __post_init__(self):
        cats = {k: tuple(v) for k, v in self.categorical.items()}
        for name, values in cats.items():
            if not values or len(set(values)) != len(values):
                raise ConfigError(f"survey item {name!r} needs unique, nonempty categories")
        object.__setattr__(self, "categorical", cats)
        object.__setattr__(self, "opinion_items", tuple(self.opinion_items))
        lo, hi = self.scale
        if not hi > lo:
            raise ConfigError(f"bad ordinal scale {self.scale}")
        object.__setattr__(self, "scale", (int(lo), int(hi)))
        if self.ordinal_encoding not in ("centered", "onehot"):
            raise ConfigError(f"ordinal_encoding must be 'centered' or 'onehot'")
        if len(set(self.opinion_items)) != len(self.opinion_items):
            raise ConfigError("opinion item names must be unique")
        if set(self.opinion_items) & set(cats):
            raise ConfigError("opinion items clash with categorical items")

    def __hash__(self):
        return hash((tuple(self.categorical), self.opinion_items, self.scale))

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(range(self.scale[0], self.scale[1] + 1))

    def to_dict(self) -> dict:
        return {
            "categorical": {k: list(v) for k, v in self.categorical.items()},
            "opinion_items": list(self.opinion_items),
            "scale": list(self.scale),
            "ordinal_encoding": self.ordinal_encoding,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SurveySchema":
        try:
            return cls(
                categorical=d["categorical"],
                opinion_items=d["opinion_items"],
                scale=tuple(d.get("scale", (1, 5))),
                ordinal_encoding=d.get("ordinal_encoding", "centered"),
            )
        except KeyError as e:
            raise ConfigError(f"survey schema missing key {e}") from None


@dataclass(frozen=True)
class SurveyResponse:
    gender: str
    age_band: str
    geography: str
    education: str
    opinions: Mapping[str, int]
    vote_intent: str | None = None

    def categorical(self, name: str) -> str:
        return getattr(self, name)

    def value(self, item: str):
        """Answer for any survey item by name, including ``vote_intent``."""
        if item in self.opinions:
            return self.opinions[item]
        if item in ("gender", "age_band", "geography", "education", "vote_intent"):
            return getattr(self, item)
        raise SchemaMismatch(f"unknown survey item {item!r}")

    def validate(self, schema: SurveySchema, party_space: PartySpace):
        for name, values in schema.categorical.items():
            v = self.categorical(name)
            if v not in values:
                raise UnknownCategory(f"{name}={v!r} not in {list(values)}")
        lo, hi = schema.scale
        if set(self.opinions) != set(schema.opinion_items):
            raise SchemaMismatch("opinion items do not match the survey schema")
        for item, v in self.opinions.items():
            if not (isinstance(v, (int, np.integer)) and lo <= v <= hi):
                raise UnknownCategory(f"{item}={v!r} outside ordinal range [{lo}, {hi}]")
        if self.vote_intent is not None and self.vote_intent not in party_space:
            raise UnknownCategory(f"vote_intent {self.vote_intent!r} is not a party")


@dataclass(frozen=True)
class LikeEvent:
    respondent_id: str
    page_party: str
    timestamp: int
    kind: Kind = Kind.POST_LIKE


@dataclass(frozen=True)
class Respondent:
    respondent_id: str
    survey: SurveyResponse
    like_history: tuple[LikeEvent, ...] = ()

    def __post_init__(self):
        hist = tuple(self.like_history)
        object.__setattr__(self, "like_history", hist)
        ts = [e.timestamp for e in hist]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise SchemaMismatch(f"like history of {self.respondent_id!r} is not time-sorted")


@dataclass(frozen=True)
class PartyCountVector:
    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != N_PARTIES or min(counts) < 0:
            raise ValidationError(f"need {N_PARTIES} nonnegative counts, got {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)


@dataclass(frozen=True)
class Dataset:
    respondents: tuple[Respondent, ...]
    party_space: PartySpace
    window: tuple[int, int]

    def __post_init__(self):
        resp = tuple(self.respondents)
        object.__setattr__(self, "respondents", resp)
        ids = [r.respondent_id for r in resp]
        if len(set(ids)) != len(ids):
            raise SchemaMismatch("respondent ids must be unique")
        start, end = self.window
        for r in resp:
            for e in r.like_history:
                if e.page_party not in self.party_space:
                    raise UnknownCategory(f"like on unknown party {e.page_party!r}")
                if not start <= e.timestamp <= end:
                    raise SchemaMismatch(
                        f"event at {e.timestamp} for {r.respondent_id!r} outside window {self.window}"
                    )

    def __len__(self):
        return len(self.respondents)

    def __iter__(self):
        return iter(self.respondents)

    @property
    def ids(self) -> list[str]:
        return [r.respondent_id for r in self.respondents]

    def subset(self, keep: Iterable[bool]) -> "Dataset":
        return replace(self, respondents=tuple(r for r, k in zip(self.respondents, keep) if k))


# -- filters ----------------------------------------------------------------


@dataclass(frozen=True)
class HasVoteIntent:
    def __call__(self, r: Respondent, ps: PartySpace) -> bool:
        return r.survey.vote_intent is not None


@dataclass(frozen=True)
class HasAnyLikes:
    def __call__(self, r: Respondent, ps: PartySpace) -> bool:
        return len(r.like_history) > 0


@dataclass(frozen=True)
class MinPoliticalLikes:
    k: int

    def __call__(self, r: Respondent, ps: PartySpace) -> bool:
        return like_counts(r, ps).total >= self.k


FilterRule = HasVoteIntent | HasAnyLikes | MinPoliticalLikes


def filter_dataset(ds: Dataset, rule) -> Dataset:
    """Respondents satisfying ``rule``, in original order."""
    return ds.subset(rule(r, ds.party_space) for r in ds.respondents)


def like_counts(r: Respondent, party_space: PartySpace, kinds=POLITICAL) -> PartyCountVector:
    kinds = frozenset(Kind(k) for k in kinds)
    if not kinds:
        raise ValidationError("kinds must be nonempty")
    counts = [0] * N_PARTIES
    for e in r.like_history:
        if e.kind in kinds:
            counts[party_space.index(e.page_party)] += 1
    return PartyCountVector(tuple(counts))


def count_matrix(ds: Dataset, kinds=POLITICAL) -> np.ndarray:
    """(n, 9) integer matrix of per-party like counts, rows in dataset order."""
    out = np.zeros((len(ds), N_PARTIES), dtype=np.int64)
    for i, r in enumerate(ds.respondents):
        out[i] = like_counts(r, ds.party_space, kinds).counts
    return out


def vote_labels(ds: Dataset) -> np.ndarray:
    ps = ds.party_space
    return np.array([ps.index(r.survey.vote_intent) for r in ds.respondents], dtype=np.int64)


# -- config -------------------------------------------------------------------

DEFAULT_WINDOW = (1420070400, 1483228800)  # 2015-01-01 .. 2017-01-01 UTC


@dataclass(frozen=True)
class StudyConfig:
    party_space: PartySpace
    survey: SurveySchema
    window: tuple[int, int] = DEFAULT_WINDOW
    generator: Mapping = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = self.party_space.to_dict()
        d["window"] = list(self.window)
        d["survey"] = self.survey.to_dict()
        if self.generator:
            d["generator"] = dict(self.generator)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "StudyConfig":
        base = default_config()
        ps = PartySpace.from_dict(d) if "parties" in d else base.party_space
        survey = SurveySchema.from_dict(d["survey"]) if "survey" in d else base.survey
        window = tuple(int(t) for t in d.get("window", base.window))
        if len(window) != 2 or window[1] < window[0]:
            raise ConfigError(f"bad window {window}")
        return cls(ps, survey, window, dict(d.get("generator", {})))


def default_config() -> StudyConfig:
    parties = tuple(f"P{i}" for i in range(1, N_PARTIES + 1))
    blocs = {p: (Bloc.LEFT if i < 5 else Bloc.RIGHT) for i, p in enumerate(parties)}
    survey = SurveySchema(
        categorical={
            "gender": ("Male", "Female"),
            "age_band": ("18-29", "30-44", "45-59", "60+"),
            "geography": ("Capital", "Zealand", "Southern", "Central", "Northern"),
            "education": ("Primary", "Vocational", "ShortTertiary", "Higher"),
        },
        opinion_items=tuple(f"opinion_{i:02d}" for i in range(1, 16)),
    )
    return StudyConfig(PartySpace(parties, blocs), survey)


def load_config(path: str | Path | None) -> StudyConfig:
    if path is None:
        return default_config()
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return StudyConfig.from_dict(d)


def save_config(cfg: StudyConfig, path: str | Path):
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


# -- JSON Lines ---------------------------------------------------------------


def respondent_to_dict(r: Respondent) -> dict:
    s = r.survey
    return {
        "respondent_id": r.respondent_id,
        "survey": {
            "gender": s.gender,
            "age_band": s.age_band,
            "geography": s.geography,
            "education": s.education,
            "opinions": dict(s.opinions),
            "vote_intent": s.vote_intent,
        },
        "like_history": [
            {"page_party": e.page_party, "timestamp": e.timestamp, "kind": e.kind.value}
            for e in r.like_history
        ],
    }


def respondent_from_dict(d: Mapping) -> Respondent:
    try:
        rid = str(d["respondent_id"])
        s = d["survey"]
        survey = SurveyResponse(
            gender=s["gender"],
            age_band=s["age_band"],
            geography=s["geography"],
            education=s["education"],
            opinions={k: int(v) for k, v in s["opinions"].items()},
            vote_intent=s.get("vote_intent"),
        )
        events = tuple(
            LikeEvent(rid, e["page_party"], int(e["timestamp"]), Kind(e.get("kind", "PostLike")))
            for e in d.get("like_history", ())
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaMismatch(f"malformed respondent record: {e!r}") from None
    return Respondent(rid, survey, events)


def write_dataset(ds: Dataset, path: str | Path):
    with open(path, "w") as fh:
        for r in ds.respondents:
            fh.write(json.dumps(respondent_to_dict(r), separators=(",", ":")) + "\n")


def read_dataset(path: str | Path, cfg: StudyConfig, validate: bool = True) -> Dataset:
    respondents = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                except json.JSONDecodeError as e:
                    raise SchemaMismatch(f"{path}:{lineno}: {e}") from None
                respondents.append(respondent_from_dict(d))
    except OSError as e:
        raise SchemaMismatch(f"cannot read dataset {path}: {e}") from None
    ds = Dataset(tuple(respondents), cfg.party_space, cfg.window)
    if validate:
        for r in ds.respondents:
            r.survey.validate(cfg.survey, cfg.party_space)
    return ds


def read_jsonl(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_jsonl(rows: Sequence[Mapping], path: str | Path):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")
