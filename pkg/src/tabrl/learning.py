"""Tabular action values and temporal-difference update rules.

Four learners share one Q table layout:

* Q-learning and SARSA (one entry per step),
* SARSA(lambda) with replacing traces,
* true online SARSA(lambda) with dutch traces (learning rate folded into the
  trace magnitudes).

Trace-based learners keep their traces in a :class:`TraceRegister`.  In the
reduced modes the register only remembers the most recent pairs, sized so that
no trace it drops could still be above ``trace_threshold``.

The functions here are the readable reference path; ``tabrl._core`` holds a
compiled agent that reproduces them bit for bit.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

REPLACING = "replacing"
DUTCH = "dutch"
FULL = "full"
TRACE_MODES = (REPLACING, DUTCH, FULL)
_TINY = sys.float_info.min


class LearningError(ValueError):
    pass


@dataclass
class LearningParams:
    alpha: float = 0.1
    gamma: float = 0.9
    lam: float = 0.9
    trace_threshold: float = 0.01
    r_max: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "gamma", "trace_threshold"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise LearningError(f"{name} = {value} outside the open interval (0, 1)")
        # lam = 0 is allowed: traces then never outlive their step
        if not (0.0 <= self.lam < 1.0):
            raise LearningError(f"lam = {self.lam} outside [0, 1)")
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise LearningError(f"r_max = {self.r_max} must be a positive finite number")

    @property
    def decay(self) -> float:
        return self.gamma * self.lam


class QTable:
    """Dense ``n_states x n_actions`` matrix of action values, zero-initialised."""

    def __init__(self, n_states: int, n_actions: int, values: np.ndarray | None = None):
        if n_states < 1 or n_actions < 1:
            raise LearningError("Q table needs at least one state and one action")
        self.n_states = int(n_states)
        self.n_actions = int(n_actions)
        if values is None:
            values = np.zeros((self.n_states, self.n_actions))
        else:
            values = np.ascontiguousarray(values, dtype=np.float64)
            if values.shape != (self.n_states, self.n_actions):
                raise LearningError(f"values shape {values.shape} != ({n_states}, {n_actions})")
        self.values = values

    def __repr__(self):
        return f"QTable({self.n_states}x{self.n_actions})"

    def copy(self) -> "QTable":
        return QTable(self.n_states, self.n_actions, self.values.copy())

    def value(self, s: int) -> float:
        return value_of(self, s)

    def greedy(self, s: int) -> int:
        return greedy_action(self, s)

    def check(self, s: int, a: int | None = None):
        if not 0 <= s < self.n_states:
            raise LearningError(f"state {s} outside [0, {self.n_states})")
        if a is not None and not 0 <= a < self.n_actions:
            raise LearningError(f"action {a} outside [0, {self.n_actions})")


def value_of(q: QTable, s: int) -> float:
    q.check(s)
    return float(q.values[s].max())


def greedy_action(q: QTable, s: int) -> int:
    # np.argmax returns the first maximum, i.e. lowest action index on ties
    q.check(s)
    return int(np.argmax(q.values[s]))


def retr_capacity(params: LearningParams) -> int:
    """Number of past state-action traces kept besides the current pair.

    A pair untouched for ``n`` steps has trace ``(gamma*lam)**n``; it is kept
    while that stays at or above the threshold.

    >>> retr_capacity(LearningParams(gamma=0.9, lam=0.9, trace_threshold=0.01))
    21
    """
    gl = params.gamma * params.lam
    if gl <= 0.0:
        return 0
    return max(0, math.floor(math.log(params.trace_threshold) / math.log(gl)))


class TraceRegister:
    """Eligibility traces of recently visited (state, action) pairs.

    Entries are kept oldest-first internally (dict insertion order), so the
    oldest pair is evicted first.  ``capacity`` counts the current pair.
    ``mode='full'`` never evicts.
    """

    def __init__(self, mode: str = REPLACING, capacity: int | None = None, threshold: float = 0.0):
        if mode not in TRACE_MODES:
            raise LearningError(f"unknown trace mode {mode!r}")
        if mode != FULL and (capacity is None or capacity < 1):
            raise LearningError("reduced trace registers need a capacity >= 1")
        self.mode = mode
        self.capacity = capacity if mode != FULL else None
        self.threshold = threshold
        self._e: dict[tuple[int, int], float] = {}

    @classmethod
    def reduced(cls, params: LearningParams, mode: str = REPLACING) -> "TraceRegister":
        threshold = params.trace_threshold if mode == REPLACING else 0.0
        return cls(mode, retr_capacity(params) + 1, threshold)

    def __len__(self):
        return len(self._e)

    def __contains__(self, pair):
        return pair in self._e

    def get(self, s: int, a: int) -> float:
        return self._e.get((s, a), 0.0)

    def entries(self) -> list[tuple[int, int, float]]:
        """(state, action, magnitude), most recent first."""
        return [(s, a, e) for (s, a), e in reversed(self._e.items())]

    def clear(self):
        self._e.clear()

    def _decay(self, factor: float, floor: float):
        # traces below ``floor`` (threshold or smallest normal double) are dropped
        e = self._e
        dead = []
        for key in e:
            e[key] *= factor
            if e[key] < floor:
                dead.append(key)
        for key in dead:
            del e[key]

    def _touch(self, key, value: float):
        e = self._e
        e.pop(key, None)
        e[key] = value
        if self.capacity is not None:
            while len(e) > self.capacity:
                del e[next(iter(e))]

    def visit_replacing(self, s: int, a: int, decay: float):
        self._decay(decay, max(self.threshold, _TINY))
        self._touch((s, a), 1.0)

    def visit_dutch(self, s: int, a: int, decay: float, alpha: float):
        self._decay(decay, _TINY)
        old = self._e.get((s, a), 0.0)
        self._touch((s, a), (1.0 - alpha) * old + alpha)

    def apply(self, values: np.ndarray, coef: float):
        for (s, a), e in self._e.items():
            values[s, a] += coef * e


@dataclass
class ToslCarry:
    """Q(s', a') read before the previous true-online update."""

    q_old: float = 0.0

    def reset(self):
        self.q_old = 0.0


def _check_reward(r: float):
    if not math.isfinite(r):
        raise LearningError(f"non-finite reward {r!r}")


def q_learning_update(q: QTable, s: int, a: int, r: float, s_next: int, params: LearningParams,
                      terminal: bool = False) -> float:
    """One Q-learning step; returns the TD error."""
    _check_reward(r)
    q.check(s, a)
    q.check(s_next)
    v = q.values
    v_next = 0.0 if terminal else float(v[s_next].max())
    delta = r + params.gamma * v_next - float(v[s, a])
    v[s, a] += params.alpha * delta
    return delta


def sarsa_update(q: QTable, s: int, a: int, r: float, s_next: int, a_next: int, params: LearningParams,
                 terminal: bool = False) -> float:
    """One SARSA step, bootstrapping on the action actually chosen next."""
    _check_reward(r)
    q.check(s, a)
    v = q.values
    if terminal:
        q_next = 0.0
    else:
        q.check(s_next, a_next)
        q_next = float(v[s_next, a_next])
    delta = r + params.gamma * q_next - float(v[s, a])
    v[s, a] += params.alpha * delta
    return delta


def sarsa_lambda_update(q: QTable, traces: TraceRegister, s: int, a: int, r: float, s_next: int, a_next: int,
                        params: LearningParams, terminal: bool = False) -> float:
    """SARSA(lambda) with replacing traces."""
    if traces.mode not in (REPLACING, FULL):
        raise LearningError(f"SARSA(lambda) needs replacing or full traces, got {traces.mode!r}")
    _check_reward(r)
    q.check(s, a)
    v = q.values
    if terminal:
        q_next = 0.0
    else:
        q.check(s_next, a_next)
        q_next = float(v[s_next, a_next])
    delta = r + params.gamma * q_next - float(v[s, a])
    traces.visit_replacing(s, a, params.gamma * params.lam)
    traces.apply(v, params.alpha * delta)
    return delta


def tosl_update(q: QTable, traces: TraceRegister, carry: ToslCarry, s: int, a: int, r: float, s_next: int,
                a_next: int, params: LearningParams, terminal: bool = False) -> float:
    """True online SARSA(lambda) step with dutch traces.

    Traces carry the learning rate, so the current pair's trace becomes
    ``(1 - alpha) * decayed + alpha`` instead of 1.
    """
    if traces.mode not in (DUTCH, FULL):
        raise LearningError(f"true online SARSA(lambda) needs dutch or full traces, got {traces.mode!r}")
    _check_reward(r)
    q.check(s, a)
    v = q.values
    if terminal:
        q_next = 0.0
    else:
        q.check(s_next, a_next)
        q_next = float(v[s_next, a_next])
    alpha = params.alpha
    q_sa = float(v[s, a])
    delta = r + params.gamma * q_next - q_sa
    dq = q_sa - carry.q_old
    traces.visit_dutch(s, a, params.gamma * params.lam, alpha)
    traces.apply(v, delta + dq)
    v[s, a] -= alpha * dq
    carry.q_old = q_next
    return delta
