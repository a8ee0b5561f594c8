import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sarsa_lambda_dense, true_online_sarsa
from tabrl.learning import (DUTCH, FULL, REPLACING, LearningError, LearningParams, QTable, ToslCarry, TraceRegister,
                            greedy_action, q_learning_update, retr_capacity, sarsa_lambda_update, sarsa_update,
                            tosl_update, value_of)

P = LearningParams()


def random_stream(n, n_s, n_a, seed, r_lo=-1.0, r_hi=1.0):
    rng = random.Random(seed)
    s, a = rng.randrange(n_s), rng.randrange(n_a)
    out = []
    for _ in range(n):
        s2, a2 = rng.randrange(n_s), rng.randrange(n_a)
        out.append((s, a, rng.uniform(r_lo, r_hi), s2, a2))
        s, a = s2, a2
    return out


# retr capacity ---------------------------------------------------------------


@pytest.mark.parametrize("gamma,lam,thr,expected", [
    (0.9, 0.9, 0.01, 21),
    (0.9, 0.5, 0.01, 5),  # ln(0.01)/ln(0.45) = 5.77
    (0.5, 0.999, 0.99, 0),
    (0.9, 0.0, 0.01, 0),
])
def test_retr_capacity(gamma, lam, thr, expected):
    assert retr_capacity(LearningParams(gamma=gamma, lam=lam, trace_threshold=thr)) == expected


def test_params_validation():
    for kw in ({"alpha": 1.5}, {"gamma": 1.0}, {"lam": 1.0}, {"trace_threshold": 0.0}, {"r_max": 0.0}):
        with pytest.raises(LearningError):
            LearningParams(**kw)


# one-step rules -----------------------------------------------------------------


def test_q_learning_zero_table():
    q = QTable(2, 2)
    assert q_learning_update(q, 0, 1, 1.0, 1, P) == 1.0
    assert q.values[0, 1] == pytest.approx(0.1)
    assert np.count_nonzero(q.values) == 1


def test_q_learning_bootstrap():
    q = QTable(2, 2)
    q.values[1] = (2.0, 0.0)
    d = q_learning_update(q, 0, 0, 0.0, 1, P)
    assert d == pytest.approx(1.8)
    assert q.values[0, 0] == pytest.approx(0.18)


def test_q_learning_fixed_point():
    q = QTable(2, 1)
    q.values[:] = 0.0
    before = q.values.copy()
    assert q_learning_update(q, 0, 0, 0.0, 1, P) == 0.0
    assert np.array_equal(q.values, before)


def test_sarsa_uses_next_action():
    q = QTable(2, 2)
    q.values[1] = (-1.0, 5.0)
    assert sarsa_update(q.copy(), 0, 0, 0.0, 1, 0, P) == pytest.approx(-0.9)
    assert q_learning_update(q.copy(), 0, 0, 0.0, 1, P) == pytest.approx(4.5)
    q2 = QTable(2, 2)
    q2.values[1] = (0.0, 3.0)
    assert sarsa_update(q2.copy(), 0, 0, 1.0, 1, 0, P) == 1.0
    assert sarsa_update(q2.copy(), 0, 0, 1.0, 1, 1, P) == q_learning_update(q2.copy(), 0, 0, 1.0, 1, P)


def test_terminal_bootstrap_is_zero():
    q = QTable(2, 2)
    q.values[1] = (7.0, 7.0)
    assert q_learning_update(q.copy(), 0, 0, 1.0, 1, P, terminal=True) == 1.0
    assert sarsa_update(q.copy(), 0, 0, 1.0, 1, 0, P, terminal=True) == 1.0


def test_non_finite_reward():
    with pytest.raises(LearningError):
        q_learning_update(QTable(1, 1), 0, 0, math.nan, 0, P)
    with pytest.raises(LearningError):
        sarsa_update(QTable(1, 1), 0, 0, math.inf, 0, 0, P)


def test_value_and_argmax():
    q = QTable(3, 3)
    assert value_of(q, 0) == 0.0
    q.values[1] = (1, 3, 2)
    assert value_of(q, 1) == 3.0
    q.values[2] = (2, 2, 0)
    assert value_of(q, 2) == 2.0 and greedy_action(q, 2) == 0


# eligibility traces -------------------------------------------------------------


def test_sarsa_lambda_first_step_and_decay():
    q = QTable(3, 2)
    tr = TraceRegister.reduced(P, REPLACING)
    d = sarsa_lambda_update(q, tr, 0, 0, 1.0, 1, 0, P)
    assert np.count_nonzero(q.values) == 1 and q.values[0, 0] == pytest.approx(0.1 * d)
    sarsa_lambda_update(q, tr, 1, 0, 0.0, 2, 0, P)
    assert tr.get(0, 0) == pytest.approx(0.81)


def test_replacing_horizon_21_vs_22():
    tr = TraceRegister.reduced(P, REPLACING)
    assert tr.capacity == 22
    q = QTable(40, 1)
    # visit states 0..22 once each, then one update at state 23 with delta != 0
    for s in range(23):
        sarsa_lambda_update(q, tr, s, 0, 0.0, s + 1, 0, P)
    before = q.values.copy()
    sarsa_lambda_update(q, tr, 23, 0, 1.0, 24, 0, P)
    changed = set(np.nonzero(q.values[:, 0] != before[:, 0])[0].tolist())
    assert 2 in changed  # visited 21 steps before the update
    assert 1 not in changed and 0 not in changed  # 22 and 23 steps before
    assert tr.get(2, 0) == pytest.approx(0.81 ** 21)


def test_trace_register_invariants():
    tr = TraceRegister(REPLACING, capacity=5, threshold=0.01)
    for k in range(50):
        tr.visit_replacing(k % 7, k % 2, 0.81)
        ents = tr.entries()
        assert len(ents) <= 5
        assert len({(s, a) for s, a, _ in ents}) == len(ents)
        assert all(0 < e <= 1 for *_, e in ents)
        assert ents[0][:2] == (k % 7, k % 2) and ents[0][2] == 1.0
    with pytest.raises(LearningError):
        TraceRegister(REPLACING, capacity=0)
    with pytest.raises(LearningError):
        TraceRegister("accumulating", capacity=3)


def test_trace_decay_power():
    tr = TraceRegister(FULL)
    tr.visit_replacing(0, 0, 0.81)
    for k in range(1, 10):
        tr.visit_replacing(1, k % 2, 0.81)
        assert tr.get(0, 0) == pytest.approx(0.81 ** k, rel=1e-14)


def test_sarsa_lambda_matches_dense_oracle():
    stream = random_stream(500, 8, 3, seed=4)
    q = QTable(8, 3)
    tr = TraceRegister(FULL)
    for s, a, r, s2, a2 in stream:
        sarsa_lambda_update(q, tr, s, a, r, s2, a2, P)
    ref = sarsa_lambda_dense(stream, 8, 3, P.alpha, P.gamma, P.lam)
    np.testing.assert_allclose(q.values, ref, rtol=1e-12, atol=1e-13)


def test_full_equals_large_reduced_bitwise():
    stream = random_stream(1000, 64, 4, seed=11)
    q_full, q_red = QTable(64, 4), QTable(64, 4)
    full = TraceRegister(FULL)
    red = TraceRegister(REPLACING, capacity=1000, threshold=0.0)
    for s, a, r, s2, a2 in stream:
        sarsa_lambda_update(q_full, full, s, a, r, s2, a2, P)
        sarsa_lambda_update(q_red, red, s, a, r, s2, a2, P)
    assert np.array_equal(q_full.values, q_red.values)


def test_bounded_divergence_per_step():
    stream = random_stream(1000, 64, 4, seed=12)
    q_full, q_red = QTable(64, 4), QTable(64, 4)
    full, red = TraceRegister(FULL), TraceRegister.reduced(P, REPLACING)
    for s, a, r, s2, a2 in stream:
        gap_before = np.abs(q_full.values - q_red.values).max()
        d = sarsa_lambda_update(q_full, full, s, a, r, s2, a2, P)
        n_evicted = sum(1 for (x, b, _) in full.entries() if (x, b) not in red)
        sarsa_lambda_update(q_red, red, s, a, r, s2, a2, P)
        gap_after = np.abs(q_full.values - q_red.values).max()
        # growth of the gap in one step: the dropped traces are each below the threshold,
        # plus the tiny difference in delta inherited from the existing gap
        bound = P.alpha * abs(d) * P.trace_threshold * n_evicted + (1 + P.gamma) * gap_before * 1.0
        assert gap_after <= gap_before + bound + 1e-15


def test_q_boundedness():
    stream = random_stream(3000, 10, 2, seed=5)
    q = QTable(10, 2)
    tr = TraceRegister.reduced(P, REPLACING)
    qmax = P.r_max / (1 - P.gamma)
    for s, a, r, s2, a2 in stream:
        sarsa_lambda_update(q, tr, s, a, r, s2, a2, P)
        assert np.abs(q.values).max() <= qmax + 1e-9


# true online ------------------------------------------------------------------------


def test_tosl_first_step():
    q = QTable(2, 2)
    tr = TraceRegister.reduced(P, DUTCH)
    carry = ToslCarry()
    tosl_update(q, tr, carry, 0, 0, 1.0, 1, 0, P)
    assert q.values[0, 0] == pytest.approx(0.1)
    assert tr.get(0, 0) == pytest.approx(P.alpha)


def test_tosl_two_step_hand_trace():
    # 2-state chain 0 -> 1 -> 0, action 0 throughout, gamma = lam = 0.9, alpha = 0.1
    # step 1: (0,0) r=1 -> (1,0).  delta=1, D=0, e00=0.1 -> Q00 = 0.1; q_old = Q10 = 0
    # step 2: (1,0) r=2 -> (0,0).  Q_next = Q00 = 0.1, delta = 2 + 0.09 - 0 = 2.09, D = 0 - 0 = 0
    #         e00 = 0.81*0.1 = 0.081, e10 = 0.1; Q00 += 2.09*0.081, Q10 += 2.09*0.1
    q = QTable(2, 1)
    tr = TraceRegister.reduced(P, DUTCH)
    c = ToslCarry()
    tosl_update(q, tr, c, 0, 0, 1.0, 1, 0, P)
    tosl_update(q, tr, c, 1, 0, 2.0, 0, 0, P)
    assert q.values[0, 0] == pytest.approx(0.1 + 2.09 * 0.081, rel=1e-14)
    assert q.values[1, 0] == pytest.approx(0.209, rel=1e-14)
    assert c.q_old == pytest.approx(0.1)
    ref = true_online_sarsa([(0, 0, 1.0, 1, 0), (1, 0, 2.0, 0, 0)], 2, 1, 0.1, 0.9, 0.9)
    np.testing.assert_allclose(q.values, ref, rtol=1e-14)


def test_tosl_matches_oracle_on_random_stream():
    stream = random_stream(400, 6, 3, seed=9)
    q = QTable(6, 3)
    tr, c = TraceRegister(FULL), ToslCarry()
    for s, a, r, s2, a2 in stream:
        tosl_update(q, tr, c, s, a, r, s2, a2, P)
    ref = true_online_sarsa(stream, 6, 3, P.alpha, P.gamma, P.lam)
    np.testing.assert_allclose(q.values, ref, rtol=1e-10, atol=1e-12)


def test_tosl_lambda_zero_is_sarsa():
    p0 = LearningParams(lam=0.0)
    stream = random_stream(500, 5, 2, seed=3)
    q1, q2 = QTable(5, 2), QTable(5, 2)
    tr, c = TraceRegister.reduced(p0, DUTCH), ToslCarry()
    for s, a, r, s2, a2 in stream:
        tosl_update(q1, tr, c, s, a, r, s2, a2, p0)
        sarsa_update(q2, s, a, r, s2, a2, p0)
    np.testing.assert_allclose(q1.values, q2.values, rtol=1e-12, atol=1e-14)


def test_tosl_rejects_replacing_register():
    with pytest.raises(LearningError):
        tosl_update(QTable(1, 1), TraceRegister(REPLACING, 3), ToslCarry(), 0, 0, 0.0, 0, 0, P)
    with pytest.raises(LearningError):
        sarsa_lambda_update(QTable(1, 1), TraceRegister(DUTCH, 3), 0, 0, 0.0, 0, 0, P)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 0.5), st.floats(0.1, 0.95))
def test_trace_register_mode_full_vs_large_reduced_tosl(seed, alpha, lam):
    p = LearningParams(alpha=alpha, lam=lam)
    stream = random_stream(200, 6, 2, seed)
    qa, qb = QTable(6, 2), QTable(6, 2)
    ta, tb = TraceRegister(FULL), TraceRegister(DUTCH, capacity=500)
    ca, cb = ToslCarry(), ToslCarry()
    for s, a, r, s2, a2 in stream:
        tosl_update(qa, ta, ca, s, a, r, s2, a2, p)
        tosl_update(qb, tb, cb, s, a, r, s2, a2, p)
    assert np.array_equal(qa.values, qb.values)
