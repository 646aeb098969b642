"""Tag and comment-like propagation, and detection of political media posts.

Each user carries a cumulative, unnormalised 9-vector. A tag (or a qualifying
comment-like) adds each participant's normalised post-like vector to the
other's propagation vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import N_PARTIES
from .errors import TooFewPosts, Unscorable


@dataclass(frozen=True)
class MediaPost:
    post_id: str
    liker_ids: frozenset[str]
    commenter_ids: frozenset[str]

    @classmethod
    def from_dict(cls, d: Mapping) -> "MediaPost":
        return cls(str(d["post_id"]), frozenset(d.get("liker_ids", ())),
                   frozenset(d.get("commenter_ids", ())))

    def to_dict(self) -> dict:
        return {"post_id": self.post_id, "liker_ids": sorted(self.liker_ids),
                "commenter_ids": sorted(self.commenter_ids)}


@dataclass(frozen=True)
class CommentLike:
    liker_id: str
    author_id: str
    post_id: str
    on_politician_page: bool = False


class PropagationState:
    """Per-user cumulative propagation vectors, owned by a single caller."""

    def __init__(self):
        self._vectors: dict[str, np.ndarray] = {}

    def __getitem__(self, user_id: str) -> np.ndarray:
        v = self._vectors.get(user_id)
        return np.zeros(N_PARTIES) if v is None else v.copy()

    def __contains__(self, user_id):
        return user_id in self._vectors

    def users(self) -> list[str]:
        return sorted(self._vectors)

    def add(self, user_id: str, vec):
        vec = np.asarray(vec, dtype=float)
        if user_id in self._vectors:
            self._vectors[user_id] = self._vectors[user_id] + vec
        else:
            self._vectors[user_id] = vec.copy()


def apply_tag(tagger_id: str, tagged_id: str, like_db: Mapping[str, np.ndarray],
              state: PropagationState) -> PropagationState:
    """Exchange like vectors between two users. Self-tags are not special-cased."""
    tagger_vec = like_db[tagger_id]
    tagged_vec = like_db[tagged_id]
    state.add(tagger_id, tagged_vec)
    state.add(tagged_id, tagger_vec)
    return state


def propagate_tags(edges: Iterable[tuple[str, str]], like_db: Mapping[str, np.ndarray],
                   state: PropagationState | None = None) -> PropagationState:
    """Fold tag edges into ``state``; edges touching users without a like vector are skipped."""
    state = PropagationState() if state is None else state
    for tagger, tagged in edges:
        if tagger in like_db and tagged in like_db:
            apply_tag(tagger, tagged, like_db, state)
    return state


def propagate_comment_likes(events: Iterable[CommentLike], political_posts: set[str],
                            like_db: Mapping[str, np.ndarray],
                            state: PropagationState | None = None) -> PropagationState:
    """Same exchange as tags, for comment-likes on politicians' pages or political media posts."""
    state = PropagationState() if state is None else state
    for ev in events:
        if not (ev.on_politician_page or ev.post_id in political_posts):
            continue
        if ev.liker_id in like_db and ev.author_id in like_db:
            apply_tag(ev.liker_id, ev.author_id, like_db, state)
    return state


def _mean_vector(ids, like_db):
    vecs = [like_db[u] for u in sorted(ids) if u in like_db]
    if not vecs:
        return None
    return np.mean(vecs, axis=0)


def cosine_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise Unscorable("cosine distance is undefined for a zero vector")
    cos = float(a @ b) / float(na * nb)
    return 1.0 - min(1.0, max(-1.0, cos))


def political_score(post: MediaPost, like_db: Mapping[str, np.ndarray]) -> float:
    """Cosine distance between mean liker and mean commenter like vectors."""
    likers = _mean_vector(post.liker_ids, like_db)
    commenters = _mean_vector(post.commenter_ids, like_db)
    if likers is None or commenters is None:
        raise Unscorable(f"post {post.post_id!r} lacks likers or commenters with like vectors")
    try:
        return cosine_distance(likers, commenters)
    except Unscorable:
        raise Unscorable(f"post {post.post_id!r} has a zero aggregate vector") from None


def score_posts(posts: Sequence[MediaPost], like_db) -> dict[str, float]:
    """Scores for every scorable post; unscorable ones are left out."""
    scores = {}
    for p in posts:
        try:
            scores[p.post_id] = political_score(p, like_db)
        except Unscorable:
            continue
    return scores


def select_political(scores: Mapping[str, float]) -> set[str]:
    """Top quarter of posts by score (ceil(n/4)), plus any ties at the cut."""
    if len(scores) < 4:
        raise TooFewPosts(f"need at least 4 scorable posts, got {len(scores)}")
    ranked = sorted(scores.values(), reverse=True)
    cut = ranked[math.ceil(len(ranked) / 4) - 1]
    return {pid for pid, s in scores.items() if s >= cut}
