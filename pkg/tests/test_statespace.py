import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import index_by_enumeration, siblings_by_enumeration
from tabrl.statespace import (ActionSpace, InputVariable, SpaceError, StateCodec, build_codec, encode_state,
                              sibling_set)


def codec_of(*cards):
    return build_codec([InputVariable(f"x{i}", c) for i, c in enumerate(cards)])


ROBOT = [InputVariable("X", 2), InputVariable("Y", 2), InputVariable("theta", 3, (0, 90, -90)),
         InputVariable("d", 2, ("F", "T"))]


def test_robot_example_has_24_states():
    assert build_codec(ROBOT).n_states == 24


def test_single_unit_variable():
    c = codec_of(1)
    assert c.n_states == 1
    assert sibling_set(c, 0, 0) == [0]


def test_two_by_two_siblings():
    c = codec_of(2, 2)
    assert c.n_states == 4
    assert sibling_set(c, 3, 0) == [1, 3]
    assert [c.decode(t) for t in sibling_set(c, 3, 0)] == [(0, 1), (1, 1)]
    assert sibling_set(c, 3, 1) == [2, 3]


@pytest.mark.parametrize("values,expected", [((0, 0), 0), ((1, 0), 2), ((0, 1), 1), ((1, 1), 3)])
def test_encode_small(values, expected):
    assert encode_state(codec_of(2, 2), values) == expected


def test_encode_robot_matches_enumeration():
    # frozen from the enumeration oracle: 1*12 + 1*6 + 1*2 + 1*1
    expected = index_by_enumeration((2, 2, 3, 2), (1, 1, 1, 1))
    assert expected == 21
    assert encode_state(build_codec(ROBOT), (1, 1, 1, 1)) == 21


def test_theta_siblings_of_robot_state():
    c = build_codec(ROBOT)
    th = ROBOT[2]
    d = ROBOT[3]
    s = c.encode((1, 1, th.level_of(90), d.level_of("T")))
    sib = sibling_set(c, s, 2)
    assert sorted(c.decode(t)[2] for t in sib) == [0, 1, 2]
    assert {c.decode(t)[:2] + c.decode(t)[3:] for t in sib} == {(1, 1, 1)}
    assert s in sib


@pytest.mark.parametrize("bad", [(0,), (0, 0, 0), (2, 0), (-1, 0)])
def test_encode_rejects(bad):
    with pytest.raises(SpaceError):
        codec_of(2, 2).encode(bad)


def test_errors():
    with pytest.raises(SpaceError):
        build_codec([])
    with pytest.raises(SpaceError):
        InputVariable("x", 0)
    with pytest.raises(SpaceError):
        codec_of(2 ** 32, 2 ** 32)
    c = codec_of(2, 3)
    with pytest.raises(SpaceError):
        c.sibling_set(6, 0)
    with pytest.raises(SpaceError):
        c.sibling_set(0, 2)
    with pytest.raises(SpaceError):
        c.decode(-1)


def test_lazy_and_table_agree():
    vars_ = [InputVariable("a", 3), InputVariable("b", 4), InputVariable("c", 2)]
    eager = StateCodec(vars_)
    lazy = StateCodec(vars_, sibling_budget=0)
    assert eager.precomputed and not lazy.precomputed
    for s in range(eager.n_states):
        assert np.array_equal(eager.sibling_row(s), lazy.sibling_row(s))


def test_siblings_match_enumeration():
    cards = (3, 1, 2, 4)
    c = codec_of(*cards)
    for s in range(c.n_states):
        for i in range(len(cards)):
            assert c.sibling_set(s, i) == siblings_by_enumeration(cards, s, i)


def test_action_space():
    sp = ActionSpace((("left", 3), ("right", 3)))
    assert sp.n_actions == 9
    assert sp.decode(sp.encode((2, 1))) == (2, 1)
    assert sp.encode((1, 0)) == 3
    with pytest.raises(SpaceError):
        sp.decode(9)


def test_level_labels():
    v = InputVariable("d", 2, ("F", "T"))
    assert v.level_of("T") == 1
    with pytest.raises(SpaceError):
        v.level_of("X")
    with pytest.raises(SpaceError):
        InputVariable("d", 2, ("F",))


cards_st = st.lists(st.integers(1, 5), min_size=1, max_size=5)


@settings(max_examples=60, deadline=None)
@given(cards_st, st.data())
def test_roundtrip_and_sibling_rules(cards, data):
    c = codec_of(*cards)
    s = data.draw(st.integers(0, c.n_states - 1))
    assert c.encode(c.decode(s)) == s
    total = 0
    for i in range(len(cards)):
        sib = c.sibling_set(s, i)
        total += len(sib)
        assert sib == sorted(sib) and s in sib
        me = c.decode(s)
        for t in sib:
            other = c.decode(t)
            assert all(other[j] == me[j] for j in range(len(cards)) if j != i)
            assert s in c.sibling_set(t, i)
    assert total == sum(cards)
