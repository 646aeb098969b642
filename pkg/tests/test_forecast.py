import datetime as dt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from likevote.core import default_config
from likevote.errors import EmptyUserList, ValidationError, ZeroTotal, ZeroWeightMass
from likevote.forecast import (
    PollObservation,
    fit_weights,
    forecast,
    mae,
    raw_count_shares,
    read_polls,
    read_shares,
    weighting_objective,
    write_polls,
    write_shares,
)

PS = default_config().party_space
D1, D2 = dt.date(2014, 3, 1), dt.date(2014, 9, 1)


def _users(*tops):
    return [np.eye(9, dtype=int)[t] * 3 for t in tops]


def test_raw_count_shares_examples():
    s = raw_count_shares(_users(0, 0, 1, 5))
    assert s[0] == 0.5 and s[1] == 0.25 and s[5] == 0.25 and s.sum() == 1
    # ties go to the lower index
    assert raw_count_shares([[2, 2, 0, 0, 0, 0, 0, 0, 0]])[0] == 1.0
    with pytest.raises(EmptyUserList):
        raw_count_shares([])
    with pytest.raises(ZeroTotal):
        raw_count_shares([[0] * 9])


def test_mae_example():
    a = np.full(9, 1 / 9)
    b = np.eye(9)[0]
    assert mae(a, b) == pytest.approx(16 / 81)


shares = st.lists(st.floats(0, 1), min_size=9, max_size=9).filter(lambda v: sum(v) > 0.1).map(
    lambda v: np.array(v) / sum(v))


@given(shares, shares, shares)
def test_mae_is_a_metric(a, b, c):
    assert mae(a, b) == pytest.approx(mae(b, a))
    assert mae(a, c) <= mae(a, b) + mae(b, c) + 1e-12
    assert mae(a, a) == 0


def _dirichlet(seed):
    return np.random.default_rng(seed).dirichlet(np.ones(9) * 2)


def test_identical_polls_fit_exactly():
    f = _dirichlet(0)
    fit = fit_weights([f, f], [PollObservation(D1, f), PollObservation(D2, f)])
    assert fit.objective < 1e-12


def test_recovers_planted_factor_two():
    f1, f2 = _dirichlet(1), _dirichlet(2)
    w_true = np.ones(9)
    w_true[3] = 0.5
    polls = [PollObservation(d, w_true * f / (w_true @ f)) for d, f in ((D1, f1), (D2, f2))]
    fit = fit_weights([f1, f2], polls)
    assert fit.objective < 1e-8
    others = np.delete(fit.weights, 3)
    assert np.allclose(fit.weights[3] / others, 0.5, rtol=1e-3)


@given(st.integers(0, 10_000))
def test_fit_never_worse_than_unit_weights(seed):
    rng = np.random.default_rng(seed)
    fb = [rng.dirichlet(np.ones(9)) for _ in range(2)]
    polls = [PollObservation(D1, rng.dirichlet(np.ones(9))),
             PollObservation(D2, rng.dirichlet(np.ones(9)))]
    fit = fit_weights(fb, polls, max_iters=2000)
    assert fit.objective <= weighting_objective(np.ones(9), fb, [p.shares for p in polls]) + 1e-15
    assert np.all(fit.weights >= 0)


def test_fit_validation():
    f = _dirichlet(3)
    with pytest.raises(ValidationError):
        fit_weights([f], [PollObservation(D1, f)])
    with pytest.raises(ValidationError):
        fit_weights([f, f], [PollObservation(D1, f), PollObservation(D1, f)])
    with pytest.raises(ValidationError):
        fit_weights([f, f * 2], [PollObservation(D1, f), PollObservation(D2, f)])


def test_forecast_properties():
    users = _users(0, 0, 1, 5, 5, 5)
    raw = raw_count_shares(users)
    assert np.array_equal(forecast(users, np.ones(9)), raw)
    assert np.allclose(forecast(users, 7 * np.ones(9)), raw)
    assert np.array_equal(forecast(users, np.eye(9)[1]), np.eye(9)[1])
    with pytest.raises(ZeroWeightMass):
        forecast(users, np.eye(9)[8])
    with pytest.raises(ValidationError):
        forecast(users, -np.ones(9))


def test_csv_round_trips(tmp_path):
    polls = [PollObservation(D1, _dirichlet(4)), PollObservation(D2, _dirichlet(5))]
    write_polls(polls, PS, tmp_path / "p.csv")
    back = read_polls(tmp_path / "p.csv", PS)
    assert [p.date for p in back] == [D1, D2]
    assert all(np.array_equal(a.shares, b.shares) for a, b in zip(polls, back))
    s = _dirichlet(6)
    write_shares(s, PS, tmp_path / "s.csv")
    assert np.array_equal(read_shares(tmp_path / "s.csv", PS), s)
