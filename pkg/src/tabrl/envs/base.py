from __future__ import annotations

import math
from dataclasses import dataclass

from ..statespace import ActionSpace, StateCodec


class EnvError(ValueError):
    pass


@dataclass(frozen=True)
class Observation:
    """What the agent sees after one step.

    ``truncated`` marks episodes cut by the step limit: the episode is over but
    the reached state is not terminal, so learners still bootstrap from it.
    """

    values: tuple
    reward: float
    episode_done: bool = False
    truncated: bool = False

    def __post_init__(self):
        if not math.isfinite(self.reward):
            raise EnvError(f"non-finite reward {self.reward!r}")

    @property
    def terminal(self) -> bool:
        return self.episode_done and not self.truncated


class Environment:
    """Step contract shared by every task.

    Subclasses set ``codec``, ``actions``, ``r_max`` and ``step_limit``
    (``None`` for non-episodic tasks) and implement :meth:`reset` and
    :meth:`_step`.
    """

    codec: StateCodec
    actions: ActionSpace
    r_max: float = 1.0
    step_limit: int | None = None

    def __init__(self):
        self.steps_in_episode = 0
        self.episodes = 0

    @property
    def episodic(self) -> bool:
        return self.step_limit is not None

    @property
    def n_actions(self) -> int:
        return self.actions.n_actions

    def reset(self) -> tuple:
        self.steps_in_episode = 0
        self.episodes += 1
        return self._reset()

    def _reset(self) -> tuple:
        raise NotImplementedError

    def step(self, action: int) -> Observation:
        if not 0 <= action < self.actions.n_actions:
            raise EnvError(f"action {action} outside [0, {self.actions.n_actions})")
        values, reward, done = self._step(action)
        self.steps_in_episode += 1
        truncated = False
        if not done and self.step_limit is not None and self.steps_in_episode >= self.step_limit:
            done = truncated = True
        return Observation(values, float(reward), done, truncated)

    def _step(self, action: int) -> tuple[tuple, float, bool]:
        raise NotImplementedError

    def observe(self) -> tuple:
        raise NotImplementedError
