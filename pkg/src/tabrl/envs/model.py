"""Empirical MDP estimated from logged transitions."""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from ..statespace import ActionSpace, InputVariable, StateCodec
from .base import EnvError, Environment

SELF_LOOP = "self_loop"
ERROR = "error"
HOLE_POLICIES = (SELF_LOOP, ERROR)


class ModelHole(EnvError):
    """The model has no data for the requested (state, action)."""


@dataclass(frozen=True)
class Successors:
    states: np.ndarray
    counts: np.ndarray
    mean_rewards: np.ndarray
    probs: np.ndarray = field(init=False, repr=False)
    cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = self.counts / self.counts.sum()
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "cum", np.cumsum(p))
        for arr in (self.states, self.counts, self.mean_rewards, self.probs, self.cum):
            arr.setflags(write=False)


class SampleModel:
    """Counts N(s,a,s') and mean rewards, stored sparsely per (s, a).

    Immutable after construction.
    """

    def __init__(self, n_states: int, n_actions: int, rows: dict, task: str = "model"):
        self.n_states = int(n_states)
        self.n_actions = int(n_actions)
        self.task = task
        self._rows = MappingProxyType(dict(sorted(rows.items())))

    def __contains__(self, sa):
        return sa in self._rows

    def __len__(self):
        return len(self._rows)

    def successors(self, s: int, a: int) -> Successors:
        try:
            return self._rows[(s, a)]
        except KeyError:
            raise ModelHole(f"model has no transitions for state {s}, action {a}") from None

    def pairs(self):
        return self._rows.keys()

    def holes(self) -> list[tuple[int, int]]:
        return [(s, a) for s in range(self.n_states) for a in range(self.n_actions) if (s, a) not in self._rows]

    def records(self):
        """(s, a, s', count, mean_reward) in ascending key order."""
        for (s, a), row in self._rows.items():
            for sn, n, r in zip(row.states, row.counts, row.mean_rewards):
                yield s, a, int(sn), int(n), float(r)

    def probability(self, s: int, a: int, s_next: int) -> float:
        row = self._rows.get((s, a))
        if row is None:
            return 0.0
        hit = np.nonzero(row.states == s_next)[0]
        return float(row.probs[hit[0]]) if len(hit) else 0.0

    def mean_reward(self, s: int, a: int, s_next: int) -> float:
        row = self.successors(s, a)
        hit = np.nonzero(row.states == s_next)[0]
        if not len(hit):
            raise ModelHole(f"transition {s} -{a}-> {s_next} never observed")
        return float(row.mean_rewards[hit[0]])

    @classmethod
    def from_records(cls, n_states: int, n_actions: int, records, task: str = "model") -> "SampleModel":
        acc: dict[tuple[int, int], dict[int, list]] = {}
        for s, a, sn, n, r in records:
            _check_indices(s, a, sn, n_states, n_actions)
            if n < 1:
                raise EnvError(f"record ({s}, {a}, {sn}) has count {n} < 1")
            slot = acc.setdefault((s, a), {})
            if sn in slot:
                raise EnvError(f"duplicate record for transition ({s}, {a}, {sn})")
            slot[sn] = [int(n), float(r)]
        return cls(n_states, n_actions, _freeze(acc), task)


def _check_indices(s, a, sn, n_states, n_actions):
    if not (0 <= s < n_states and 0 <= sn < n_states):
        raise EnvError(f"state index out of range in transition ({s}, {a}, {sn})")
    if not 0 <= a < n_actions:
        raise EnvError(f"action {a} outside [0, {n_actions})")


def _freeze(acc):
    rows = {}
    for key, slot in acc.items():
        succ = sorted(slot)
        rows[key] = Successors(
            np.array(succ, dtype=np.int64),
            np.array([slot[k][0] for k in succ], dtype=np.float64),
            np.array([slot[k][1] for k in succ], dtype=np.float64),
        )
    return rows


def build_sample_model(log, n_states: int | None = None, n_actions: int | None = None,
                       task: str = "model") -> SampleModel:
    """Accumulate ``(s, a, s', r)`` tuples into counts and mean rewards."""
    log = list(log)
    if not log:
        raise EnvError("cannot build a sample model from an empty log")
    if n_states is None:
        n_states = 1 + max(max(s, sn) for s, _, sn, _ in log)
    if n_actions is None:
        n_actions = 1 + max(a for _, a, _, _ in log)
    acc: dict[tuple[int, int], dict[int, list]] = {}
    for s, a, sn, r in log:
        _check_indices(s, a, sn, n_states, n_actions)
        if not np.isfinite(r):
            raise EnvError(f"non-finite reward in transition ({s}, {a}, {sn})")
        slot = acc.setdefault((int(s), int(a)), {}).setdefault(int(sn), [0, 0.0])
        slot[0] += 1
        slot[1] += (r - slot[1]) / slot[0]  # running mean
    return SampleModel(n_states, n_actions, _freeze(acc), task)


def sample_model_step(model: SampleModel, s: int, a: int, rng, hole_policy: str = SELF_LOOP):
    """Draw ``(s', r)`` for ``(s, a)``; holes either self-loop with r = 0 or raise."""
    if (s, a) not in model:
        if hole_policy == SELF_LOOP:
            return s, 0.0
        raise ModelHole(f"model has no transitions for state {s}, action {a}")
    row = model.successors(s, a)
    u = rng.random()
    i = min(int(np.searchsorted(row.cum, u, side="right")), len(row.cum) - 1)
    return int(row.states[i]), float(row.mean_rewards[i])


class SampleModelEnv(Environment):
    """Environment that replays a :class:`SampleModel`.

    Without a codec the state is one variable with ``n_states`` levels.
    """

    def __init__(self, model: SampleModel, rng, codec: StateCodec | None = None, start_state: int | None = None,
                 hole_policy: str = SELF_LOOP, step_limit: int | None = None, r_max: float | None = None):
        super().__init__()
        if hole_policy not in HOLE_POLICIES:
            raise EnvError(f"unknown hole policy {hole_policy!r}; expected one of {HOLE_POLICIES}")
        if codec is None:
            codec = StateCodec([InputVariable("state", model.n_states)])
        if codec.n_states != model.n_states:
            raise EnvError(f"codec has {codec.n_states} states, model {model.n_states}")
        self.model = model
        self.rng = rng
        self.codec = codec
        self.actions = ActionSpace((("action", model.n_actions),))
        self.hole_policy = hole_policy
        self.step_limit = step_limit
        if start_state is None:
            start_state = next(iter(model.pairs()))[0] if len(model) else 0
        if not 0 <= start_state < model.n_states:
            raise EnvError(f"start state {start_state} outside [0, {model.n_states})")
        self.start_state = start_state
        self.state = start_state
        if r_max is None:
            r_max = max((abs(r) for *_, r in model.records()), default=1.0) or 1.0
        self.r_max = r_max

    def observe(self):
        return self.codec.decode(self.state)

    def _reset(self):
        self.state = self.start_state
        return self.observe()

    def _step(self, action):
        self.state, r = sample_model_step(self.model, self.state, action, self.rng, self.hole_policy)
        return self.observe(), r, False
