import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import dataset, respondent
from likevote.errors import EmptyCategorySet, SubNotSubset
from likevote.nonresponse import (
    Skew,
    chi_squared,
    grade,
    permutation_skew,
    skew_rank,
    write_skew_table,
)


def test_chi_squared_examples():
    assert chi_squared([50, 50], [100, 0]) == pytest.approx(100.0)
    assert chi_squared([10, 30, 60], [1, 3, 6]) == pytest.approx(0.0)
    with pytest.raises(EmptyCategorySet):
        chi_squared([], [])
    with pytest.raises(EmptyCategorySet):
        chi_squared([0, 0], [1, 1])


@given(st.lists(st.integers(1, 100), min_size=2, max_size=8), st.data())
def test_chi_squared_nonnegative(a, data):
    b = data.draw(st.lists(st.integers(0, 100), min_size=len(a), max_size=len(a)))
    if sum(b) == 0:
        b[0] = 1
    assert chi_squared(a, b) >= 0


def test_grade_bands():
    assert grade(0.5, 1.0)[1] is Skew.NOT_SIGNIFICANT
    assert grade(1.5, 1.0)[1] is Skew.SMALL
    assert grade(3.0, 1.0)[1] is Skew.MEDIUM
    assert grade(5.0, 1.0)[1] is Skew.LARGE
    assert [skew_rank(s) for s in Skew] == [0, 1, 2, 3]


def _population(n=600):
    return dataset([respondent(f"r{i:04d}", vote="P1", gender="Male" if i % 2 else "Female")
                    for i in range(n)])


def _keep_males(full, frac):
    # every woman stays; the first ``frac`` of the men stay
    n_men = sum(r.survey.gender == "Male" for r in full)
    seen, keep = 0, []
    for r in full:
        if r.survey.gender == "Male":
            keep.append(seen < frac * n_men)
            seen += 1
        else:
            keep.append(True)
    return full.subset(keep)


def test_identical_subsample_not_significant():
    full = _population()
    rep = permutation_skew(full, full, "gender", n_perm=500, seed=1)
    assert rep.skew is Skew.NOT_SIGNIFICANT
    assert rep.sample_size == len(full) // 2


def test_reproducible():
    full = _population()
    sub = _keep_males(full, 0.5)
    a = permutation_skew(full, sub, "gender", n_perm=300, seed=4)
    b = permutation_skew(full, sub, "gender", n_perm=300, seed=4)
    assert a == b


def test_grade_monotone_in_planted_skew():
    full = _population()
    ranks = [skew_rank(permutation_skew(full, _keep_males(full, f), "gender",
                                        n_perm=400, seed=0).skew)
             for f in (1.0, 0.8, 0.6, 0.4, 0.2, 0.0)]
    assert ranks == sorted(ranks)
    assert ranks[0] == 0 and ranks[-1] == 3


def test_sub_not_subset():
    full = _population(10)
    stranger = dataset([respondent("x", vote="P1")])
    with pytest.raises(SubNotSubset):
        permutation_skew(full, stranger, "gender", n_perm=10)


def test_skew_table(tmp_path):
    full = _population(100)
    rep = permutation_skew(full, _keep_males(full, 0.0), "gender", n_perm=200)
    write_skew_table({"women": [rep]}, tmp_path / "s.csv")
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0][:3] == ["subsample", "n_sub", "feature"]
    assert rows[1][0] == "women" and rows[1][-1] == rep.skew.value
    assert np.isfinite(float(rows[1][3]))
