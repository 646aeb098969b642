import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from likevote.core import Dataset, Kind, LikeEvent, Respondent, SurveyResponse, default_config

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

T0 = 1_450_000_000


@pytest.fixture
def study():
    return default_config()


def survey(vote="P1", gender="Female", age="30-44", opinion=3, **kw):
    opinions = {f"opinion_{i:02d}": opinion for i in range(1, 16)}
    opinions.update(kw.pop("opinions", {}))
    return SurveyResponse(gender=gender, age_band=age, geography=kw.pop("geography", "Capital"),
                          education=kw.pop("education", "Higher"), opinions=opinions,
                          vote_intent=vote)


def respondent(rid, likes=(), vote="P1", **kw):
    """``likes`` holds party names, or (party, timestamp[, kind]) tuples."""
    events = []
    for i, like in enumerate(likes):
        if isinstance(like, str):
            like = (like, T0 + i)
        party, t = like[0], like[1]
        kind = like[2] if len(like) > 2 else Kind.POST_LIKE
        events.append(LikeEvent(rid, party, t, kind))
    events.sort(key=lambda e: e.timestamp)
    return Respondent(rid, survey(vote, **kw), tuple(events))


def dataset(respondents, study=None):
    study = default_config() if study is None else study
    return Dataset(tuple(respondents), study.party_space, study.window)


def counts(**parties):
    v = np.zeros(9, dtype=np.int64)
    for p, c in parties.items():
        v[int(p[1:]) - 1] = c
    return v


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
