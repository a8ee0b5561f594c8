"""Action selection: epsilon-greedy, Boltzmann softmax and Q-biased softmax.

Q-biased softmax adds to the current Q row the average of the Q rows of its
sibling states (states that differ from it in a single input variable), so
that unexplored states borrow preferences from similar explored ones.  The
low-reward-loop evasion controller (:func:`lrle_step`) raises the softmax
temperature while the agent cycles through a few states collecting negative
reward.

All randomness comes from an explicitly passed :class:`random.Random`.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .learning import LearningParams, QTable
from .statespace import StateCodec

EPSILON_GREEDY = "epsilon_greedy"
SOFTMAX = "softmax"
QBIASSR = "qbiassr"
STRATEGIES = (EPSILON_GREEDY, SOFTMAX, QBIASSR)

TEMPERATURE_CAP = 100.0
LRLE_STEP = 0.25


class SelectionError(ValueError):
    pass


@dataclass
class SelectionConfig:
    strategy: str = SOFTMAX
    epsilon: float = 0.1
    base_temperature: float = 1.0
    normalize: bool = True
    lrle_enabled: bool | None = None
    temperature_cap: float = TEMPERATURE_CAP

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise SelectionError(f"unknown selection strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise SelectionError(f"epsilon = {self.epsilon} outside [0, 1]")
        if not self.base_temperature > 0:
            raise SelectionError(f"temperature = {self.base_temperature} must be > 0")
        if self.temperature_cap < self.base_temperature:
            raise SelectionError("temperature cap below base temperature")
        if self.lrle_enabled is None:
            self.lrle_enabled = self.strategy == QBIASSR


def normalization_factor(params: LearningParams) -> float:
    """Multiplier mapping the largest attainable |Q| to 100."""
    if not params.r_max > 0:
        raise SelectionError(f"r_max = {params.r_max} must be > 0")
    q_max = params.r_max / (1.0 - params.gamma)
    return 100.0 / q_max


def normalize_q_row(row, params: LearningParams) -> np.ndarray:
    return np.asarray(row, dtype=np.float64) * normalization_factor(params)


def softmax_probs(row, temperature: float) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    if not temperature > 0:
        raise SelectionError(f"temperature = {temperature} must be > 0")
    if not np.all(np.isfinite(row)):
        raise SelectionError("softmax over non-finite action values")
    z = np.exp((row - row.max()) / temperature)
    return z / z.sum()


def sample_index(probs: np.ndarray, u: float) -> int:
    """Index ``i`` with ``cumsum[i-1] <= u < cumsum[i]``; ``u`` uniform in [0, 1)."""
    cum = np.cumsum(probs)
    return min(int(np.searchsorted(cum, u, side="right")), len(cum) - 1)


def compute_bias(q: QTable, codec: StateCodec, s: int) -> np.ndarray:
    """Mean over variables of the mean Q row over each sibling set of ``s``."""
    if codec.n_states != q.n_states:
        raise SelectionError(f"codec has {codec.n_states} states, Q table {q.n_states}")
    sib = codec.sibling_row(s)
    offs = codec.sibling_offsets
    per_var = np.stack([q.values[sib[offs[i]:offs[i + 1]]].mean(axis=0) for i in range(codec.n_vars)])
    return per_var.mean(axis=0)


def _factor(config: SelectionConfig, params: LearningParams | None) -> float | None:
    if config.normalize and params is not None:
        return normalization_factor(params)
    return None


def _temperature(config: SelectionConfig, lrle: "LrleState | None") -> float:
    if lrle is not None and config.lrle_enabled:
        return lrle.temperature
    return config.base_temperature


def selection_probs(q: QTable, s: int, config: SelectionConfig, lrle: "LrleState | None" = None,
                    params: LearningParams | None = None, codec: StateCodec | None = None) -> np.ndarray:
    """Distribution the softmax strategies sample from in state ``s``."""
    row = q.values[s]
    if config.strategy == QBIASSR:
        if codec is None:
            raise SelectionError("Q-biased selection needs the state codec")
        row = row + compute_bias(q, codec, s)
    factor = _factor(config, params)
    if factor is not None:
        row = row * factor
    return softmax_probs(row, _temperature(config, lrle))


def softmax_select(q: QTable, s: int, config: SelectionConfig, lrle, rng, params=None) -> int:
    return sample_index(selection_probs(q, s, config, lrle, params), rng.random())


def qbiassr_select(q: QTable, codec: StateCodec, s: int, config: SelectionConfig, lrle, rng, params=None) -> int:
    return sample_index(selection_probs(q, s, config, lrle, params, codec), rng.random())


def epsilon_greedy_select(q: QTable, s: int, config: SelectionConfig, rng) -> int:
    if rng.random() < config.epsilon:
        return rng.randrange(q.n_actions)
    return int(np.argmax(q.values[s]))


def lrle_buffer_size(n_states: int, retr_size: int) -> int:
    if n_states >= 16:
        return min(max(retr_size, 4), n_states // 4)
    return max(2, n_states - 1)


@dataclass
class LrleState:
    """Recent states and rewards watched by the loop-evasion controller."""

    size: int
    base_temperature: float = 1.0
    temperature_cap: float = TEMPERATURE_CAP
    temperature: float = field(init=False)
    seq: deque = field(init=False, repr=False)
    rew: deque = field(init=False, repr=False)

    def __post_init__(self):
        if self.size < 1:
            raise SelectionError("LRLE buffer size must be >= 1")
        self.seq = deque(maxlen=self.size)
        self.rew = deque(maxlen=self.size)
        self.temperature = self.base_temperature

    def reset(self):
        self.seq.clear()
        self.rew.clear()
        self.temperature = self.base_temperature


def lrle_step(lrle: LrleState, s: int, r: float, config: SelectionConfig | None = None) -> float:
    """Record the state just reached and its reward; return the new temperature."""
    lrle.seq.append(s)
    lrle.rew.append(r)
    revisited = lrle.seq.count(s) >= 2
    losing = sum(lrle.rew) < 0.0
    redundancy = len(lrle.seq) / len(set(lrle.seq))
    if revisited and losing and redundancy > 2.0:
        lrle.temperature = min(lrle.temperature + LRLE_STEP * redundancy, lrle.temperature_cap)
    else:
        lrle.temperature = lrle.base_temperature
    return lrle.temperature
