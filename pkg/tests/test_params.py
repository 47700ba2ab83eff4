import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamqaoa.params import ParamSchedule, wrap_angle

angles = st.floats(-20, 20, allow_nan=False)


def test_zeros_and_rows():
    t = ParamSchedule.zeros(3)
    assert t.p == 3
    assert t.rows().shape == (3, 4)
    assert np.all(t.to_vector() == 0)


def test_vector_layout_is_alpha_beta_gamma_delta():
    t = ParamSchedule.from_vector(np.arange(8.0))
    assert t.alpha.tolist() == [0, 1]
    assert t.beta.tolist() == [2, 3]
    assert t.gamma.tolist() == [4, 5]
    assert t.delta.tolist() == [6, 7]


@pytest.mark.parametrize("bad", [
    dict(alpha=[0.1], beta=[0.1, 0.2], gamma=[0], delta=[0]),
    dict(alpha=[], beta=[], gamma=[], delta=[]),
    dict(alpha=[np.nan], beta=[0], gamma=[0], delta=[0]),
])
def test_rejects_malformed(bad):
    with pytest.raises(ValueError):
        ParamSchedule(**bad)


def test_arrays_are_read_only():
    t = ParamSchedule.zeros(2)
    with pytest.raises(ValueError):
        t.alpha[0] = 1.0


@given(st.lists(angles, min_size=4, max_size=4))
def test_wrap_angle_range_and_period(xs):
    w = wrap_angle(xs)
    assert np.all(w > -np.pi / 2 - 1e-12) and np.all(w <= np.pi / 2 + 1e-12)
    k = (np.asarray(xs) - w) / np.pi
    assert np.allclose(k, np.round(k), atol=1e-9)


def test_wrap_keeps_closed_end():
    assert wrap_angle(np.pi / 2) == pytest.approx(np.pi / 2)
    assert wrap_angle(-np.pi / 2) == pytest.approx(np.pi / 2)


@pytest.mark.parametrize("pos", [None, 0, 1, 2])
def test_insert_zero_layer(pos):
    t = ParamSchedule.from_rows([[0.1, 0.2, 0.3, 0.4], [0.5, 0.6, 0.7, 0.8]])
    u = t.insert_zero_layer(pos)
    k = 2 if pos is None else pos
    assert u.p == 3
    assert np.all(u.rows()[k] == 0)
    assert np.delete(u.rows(), k, axis=0).tolist() == t.rows().tolist()


def test_insert_out_of_range():
    with pytest.raises(ValueError):
        ParamSchedule.zeros(1).insert_zero_layer(3)


def test_dict_round_trip(tmp_path):
    t = ParamSchedule.from_vector(np.linspace(-1, 1, 12))
    path = tmp_path / "p.json"
    path.write_text(__import__("json").dumps(t.to_dict()))
    assert ParamSchedule.load(path).allclose(t)


def test_from_dict_names_missing_field():
    with pytest.raises(ValueError, match="delta"):
        ParamSchedule.from_dict({"alpha": [0], "beta": [0], "gamma": [0]})


def test_negation():
    t = ParamSchedule.from_vector(np.arange(4.0))
    assert (-t).to_vector().tolist() == [0, -1, -2, -3]
