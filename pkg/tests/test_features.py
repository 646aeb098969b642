import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import T0, dataset, respondent, survey
from likevote.core import Kind, PartyCountVector
from likevote.errors import FeatureError, NoPoliticalLikes, UnknownCategory, ZeroTotal
from likevote.features import (
    FeatureMatrix,
    ModelKind,
    build_matrix,
    encode_survey,
    model_sample,
    normalize_likes,
    read_labels,
    single_latest_like,
    survey_columns,
    write_labels,
)

# user A of the worked tag example: 2 likes on P4, 2 on P6, 1 on P7
USER_A = ["P4", "P4", "P6", "P6", "P7"]


def test_normalize_examples():
    assert np.array_equal(normalize_likes([2, 0, 0, 0, 0, 0, 0, 0, 0]), [1, 0, 0, 0, 0, 0, 0, 0, 0])
    assert np.allclose(normalize_likes(PartyCountVector((0, 0, 0, 2, 0, 2, 1, 0, 0))),
                       [0, 0, 0, 0.4, 0, 0.4, 0.2, 0, 0])
    with pytest.raises(ZeroTotal):
        normalize_likes([0] * 9)


vectors = st.lists(st.integers(0, 1000), min_size=9, max_size=9).filter(lambda v: sum(v) > 0)


@given(vectors)
def test_normalize_sums_to_one_and_keeps_argmax(v):
    s = normalize_likes(v)
    assert abs(s.sum() - 1) < 1e-9
    if sorted(v)[-1] != sorted(v)[-2]:
        assert np.argmax(s) == np.argmax(v)


def test_single_latest_like(study):
    ps = study.party_space
    r = respondent("a", [("P1", T0 + 10), ("P2", T0 + 20)])
    assert np.argmax(single_latest_like(r, ps)) == 1
    assert np.argmax(single_latest_like(respondent("b", [("P3", T0 + 5)]), ps)) == 2
    tie = respondent("c", [("P5", T0), ("P8", T0)])
    assert np.argmax(single_latest_like(tie, ps)) == 7
    # comment likes are not post likes
    later = respondent("d", [("P1", T0), ("P9", T0 + 1, Kind.COMMENT_LIKE)])
    assert np.argmax(single_latest_like(later, ps)) == 0
    with pytest.raises(NoPoliticalLikes):
        single_latest_like(respondent("e", [("P1", T0, Kind.COMMENT_LIKE)]), ps)


def test_encode_survey_examples(study):
    schema = study.survey
    row = encode_survey(survey(gender="Female"), schema)
    cols = survey_columns(schema)
    assert len(row) == len(cols)
    assert row[cols.index("survey:gender=Male")] == 0
    assert row[cols.index("survey:gender=Female")] == 1
    assert row[cols.index("survey:opinion_01")] == 0.0
    with pytest.raises(UnknownCategory):
        encode_survey(survey(age="12-17"), schema)


def test_onehot_ordinal_encoding(study):
    schema = dataclasses.replace(study.survey, ordinal_encoding="onehot")
    row = encode_survey(survey(opinion=2), schema)
    cols = survey_columns(schema)
    assert len(cols) == 15 + 15 * 5
    assert row[cols.index("survey:opinion_07=2")] == 1
    assert row[cols.index("survey:opinion_07=3")] == 0


def _ds():
    rs = [respondent("a", USER_A, vote="P4"),
          respondent("b", ["P1"] * 7, vote="P1"),
          respondent("c", ["P2"], vote="P2"),
          respondent("d", [], vote="P3"),
          respondent("e", ["P9"] * 8, vote=None)]
    return dataset(rs)


def test_build_matrix_shapes(study):
    ds = _ds()
    base_cols = len(survey_columns(study.survey))
    widths = {}
    for kind in ModelKind:
        sub = model_sample(ds, kind)
        fm, y = build_matrix(sub, kind, study.survey)
        widths[kind] = fm.shape[1]
        assert fm.shape[0] == len(y)
        if kind is ModelKind.ALL_LIKES_MIN7:
            assert fm.row_ids == ("b",)
        else:
            assert fm.row_ids == ("a", "b", "c")
    assert widths[ModelKind.SINGLE_LIKE] == 9
    assert widths[ModelKind.ALL_LIKES] == 9
    assert widths[ModelKind.BASELINE] == base_cols
    assert widths[ModelKind.COMBINED] == base_cols + 9
    fm, y = build_matrix(model_sample(ds, "all_likes"), "all_likes")
    assert np.allclose(fm.values[0], [0, 0, 0, 0.4, 0, 0.4, 0.2, 0, 0])
    assert list(y) == [3, 0, 1]


def test_build_matrix_requires_filters(study):
    with pytest.raises(FeatureError) as e:
        build_matrix(_ds(), ModelKind.ALL_LIKES)
    assert e.value.respondent_id == "d"


def test_onehot_groups_sum_to_one(study):
    fm, _ = build_matrix(model_sample(_ds(), "combined"), "combined", study.survey)
    for name, cats in study.survey.categorical.items():
        idx = [fm.columns.index(f"survey:{name}={c}") for c in cats]
        assert np.all(fm.values[:, idx].sum(axis=1) == 1)


def test_csv_round_trip(tmp_path, study):
    fm, y = build_matrix(model_sample(_ds(), "combined"), "combined", study.survey)
    fm.to_csv(tmp_path / "f.csv")
    back = FeatureMatrix.from_csv(tmp_path / "f.csv", "combined")
    assert back.columns == fm.columns and back.row_ids == fm.row_ids
    assert np.array_equal(back.values, fm.values)
    write_labels(fm.row_ids, y, study.party_space, tmp_path / "l.csv")
    ids, y2 = read_labels(tmp_path / "l.csv", study.party_space)
    assert ids == fm.row_ids and np.array_equal(y, y2)
    # deterministic bytes
    fm.to_csv(tmp_path / "g.csv")
    assert (tmp_path / "f.csv").read_bytes() == (tmp_path / "g.csv").read_bytes()
