"""Seeded learning processes, repetition batches and per-step cost timing."""
from __future__ import annotations

import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .agent import ALGORITHMS, TRACE_KINDS, make_agent
from .config import ConfigError, Entry
from .envs import TASK_NAMES, TaskSpec, catalog_task, load_task_file, make_env
from .learning import LearningParams, QTable
from .selection import STRATEGIES, SelectionConfig


def _open01(v):
    return 0.0 < v < 1.0


_FIELD_RULES = {
    # name: (parser, check, legal range text)
    "alpha": (float, _open01, "(0, 1)"),
    "gamma": (float, _open01, "(0, 1)"),
    "lam": (float, lambda v: 0.0 <= v < 1.0, "[0, 1)"),
    "trace_threshold": (float, _open01, "(0, 1)"),
    "epsilon": (float, lambda v: 0.0 <= v <= 1.0, "[0, 1]"),
    "temperature": (float, lambda v: 0.0 < v < math.inf, "(0, inf)"),
    "reward_scale": (float, lambda v: 0.0 < v < math.inf, "(0, inf)"),
    "r_max": (float, lambda v: 0.0 < v < math.inf, "(0, inf)"),
    "steps": (int, lambda v: v >= 1, ">= 1"),
    "repetitions": (int, lambda v: v >= 1, ">= 1"),
    "episode_limit": (int, lambda v: v >= 1, ">= 1"),
    "workers": (int, lambda v: v >= 1, ">= 1"),
    "seed": (int, lambda v: v >= 0, ">= 0"),
}
_CHOICES = {
    "algorithm": ALGORITHMS,
    "selection": STRATEGIES,
    "traces": TRACE_KINDS,
    "backend": ("auto", "python", "cython"),
    "lrle": ("auto", "true", "false"),
}
_BOOLS = ("normalize", "save_q")
_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


@dataclass
class ExperimentConfig:
    task: str = "wander-simple"
    algorithm: str = "tosl"
    selection: str = "qbiassr"
    alpha: float = 0.1
    gamma: float = 0.9
    lam: float = 0.9
    trace_threshold: float = 0.01
    traces: str = "reduced"
    epsilon: float = 0.1
    temperature: float = 1.0
    normalize: bool = True
    lrle: str = "auto"
    r_max: float | None = None
    reward_scale: float = 1.0
    steps: int = 3600
    episode_limit: int | None = None
    repetitions: int = 1
    seed: int = 0
    backend: str = "auto"
    workers: int = 1
    save_q: bool = False
    out_dir: str | None = None
    label: str | None = None

    def __post_init__(self):
        for name, (_, check, legal) in _FIELD_RULES.items():
            v = getattr(self, name)
            if v is not None and not check(v):
                raise ConfigError(f"{name} = {v} outside legal range {legal}")
        for name, choices in _CHOICES.items():
            if getattr(self, name) not in choices:
                raise ConfigError(f"{name} = {getattr(self, name)!r}; expected one of {', '.join(choices)}")

    @property
    def name(self) -> str:
        return self.label or f"{self.algorithm}+{self.selection}"

    def learning_params(self, r_max: float) -> LearningParams:
        return LearningParams(self.alpha, self.gamma, self.lam, self.trace_threshold,
                              self.r_max if self.r_max is not None else r_max)

    def selection_config(self) -> SelectionConfig:
        lrle = None if self.lrle == "auto" else self.lrle == "true"
        return SelectionConfig(self.selection, self.epsilon, self.temperature, self.normalize, lrle)

    # text round trip ---------------------------------------------------

    @classmethod
    def from_entries(cls, entries: dict[str, Entry]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, ent in entries.items():
            if key not in known:
                raise ConfigError(f"unknown key {key!r}", ent.source, ent.line)
            try:
                kwargs[key] = _parse_value(key, ent.value)
                cls._check_one(key, kwargs[key])
            except ConfigError as e:
                raise ConfigError(e.message, ent.source, ent.line) from None
        return cls(**kwargs)

    @staticmethod
    def _check_one(key, value):
        if key in _FIELD_RULES and value is not None:
            _, check, legal = _FIELD_RULES[key]
            if not check(value):
                raise ConfigError(f"{key} = {value} outside legal range {legal}")
        if key in _CHOICES and value not in _CHOICES[key]:
            raise ConfigError(f"{key} = {value!r}; expected one of {', '.join(_CHOICES[key])}")

    def to_items(self) -> dict[str, str]:
        out = {}
        for k, v in asdict(self).items():
            if v is None:
                continue
            out[k] = ("true" if v else "false") if isinstance(v, bool) else repr(v) if isinstance(v, float) else str(v)
        return out


def _parse_value(key: str, text: str):
    if key in _FIELD_RULES:
        if text.lower() in ("", "none") and key in ("r_max", "episode_limit"):
            return None
        try:
            return _FIELD_RULES[key][0](text)
        except ValueError:
            kind = "an integer" if _FIELD_RULES[key][0] is int else "a number"
            raise ConfigError(f"{key} must be {kind}, got {text!r}") from None
    if key in _BOOLS:
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{key} must be true or false, got {text!r}")
    if key in ("out_dir", "label") and text.lower() in ("", "none"):
        return None
    return text


def resolve_task(task: str) -> TaskSpec:
    """Catalog name, or path to a task-definition file."""
    if task in TASK_NAMES:
        return catalog_task(task)
    if Path(task).is_file():
        return load_task_file(task)
    raise ConfigError(f"task {task!r} is neither a catalog task ({', '.join(TASK_NAMES)}) nor a readable file")


def seed_streams(seed: int) -> tuple[random.Random, random.Random]:
    """Independent (environment, agent) generators derived from one seed."""
    env_word, agent_word = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return random.Random(int(env_word)), random.Random(int(agent_word))


@dataclass
class LearningCurve:
    rewards: np.ndarray
    cumulative: np.ndarray = field(init=False)
    episode_averages: list = field(default_factory=list)
    episode_lengths: list = field(default_factory=list)
    actions: np.ndarray | None = None  # action executed at each step

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        if self.actions is not None:
            self.actions = np.asarray(self.actions, dtype=np.int64)
        self.cumulative = cumulative_average(self.rewards)

    @property
    def final_average(self) -> float:
        return float(self.cumulative[-1])

    def __len__(self):
        return len(self.rewards)


def cumulative_average(rewards) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=np.float64)
    return np.cumsum(rewards) / np.arange(1, len(rewards) + 1)


def _backend_arg(config):
    return None if config.backend == "auto" else config.backend


def run_learning_process(config: ExperimentConfig, seed: int, spec: TaskSpec | None = None):
    """One learning process of ``config.steps`` steps; returns (QTable, LearningCurve)."""
    spec = spec or resolve_task(config.task)
    env_rng, rng = seed_streams(seed)
    env = make_env(spec, env_rng, config.reward_scale, config.episode_limit)
    codec = env.codec
    q = QTable(codec.n_states, env.n_actions)
    params = config.learning_params(env.r_max)
    agent = make_agent(q, codec, config.algorithm, params, config.selection_config(), config.traces,
                       _backend_arg(config))

    rewards = np.empty(config.steps)
    actions = np.empty(config.steps, dtype=np.int64)
    ep_avgs, ep_lens = [], []
    ep_sum, ep_len = 0.0, 0
    q_first = config.algorithm == "q"
    encode = codec.encode
    s = encode(env.reset())
    a = agent.select(s, rng)
    for k in range(config.steps):
        actions[k] = a
        obs = env.step(a)
        s2 = encode(obs.values)
        r = obs.reward
        rewards[k] = r
        terminal = obs.episode_done and not obs.truncated
        if q_first:
            agent.update(s, a, r, s2, 0, terminal)
            agent.observe(s2, r)
            a2 = agent.select(s2, rng)
        else:
            agent.observe(s2, r)
            a2 = agent.select(s2, rng)
            agent.update(s, a, r, s2, a2, terminal)
        ep_sum += r
        ep_len += 1
        if obs.episode_done:
            ep_avgs.append(ep_sum / ep_len)
            ep_lens.append(ep_len)
            ep_sum, ep_len = 0.0, 0
            agent.end_episode()
            s = encode(env.reset())
            a = agent.select(s, rng)
        else:
            s, a = s2, a2
    return q, LearningCurve(rewards, ep_avgs, ep_lens, actions)


@dataclass
class RepetitionResult:
    config: ExperimentConfig
    seeds: list
    curves: list
    q_tables: list

    @property
    def mean_curve(self) -> np.ndarray:
        return np.mean(np.stack([c.cumulative for c in self.curves]), axis=0)

    @property
    def final_averages(self) -> list[float]:
        return [c.final_average for c in self.curves]


def _one(args):
    config, seed, spec = args
    return run_learning_process(config, seed, spec)


def run_repetitions(config: ExperimentConfig, workers: int | None = None) -> RepetitionResult:
    """Repetition ``i`` uses seed ``config.seed + i``; results come back in index order."""
    spec = resolve_task(config.task)
    seeds = [config.seed + i for i in range(config.repetitions)]
    workers = workers or config.workers
    jobs = [(config, sd, spec) for sd in seeds]
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(min(workers, len(seeds), os.cpu_count() or 1)) as pool:
            out = list(pool.map(_one, jobs))
    else:
        out = [_one(j) for j in jobs]
    return RepetitionResult(config, seeds, [c for _, c in out], [q for q, _ in out])


# per-step cost ---------------------------------------------------------


class _NullAgent:
    """Does nothing; its loop time is the harness overhead."""

    backend = "python"

    def select(self, s, rng):
        return 0

    def observe(self, s, r):
        return 1.0

    def update(self, s, a, r, s_next, a_next, terminal=False):
        return 0.0


def _null_agent(backend: str):
    # the baseline must pay the same call overhead as the agent it is subtracted from
    from . import _backend

    if backend == "cython" and _backend.CoreNullAgent is not None:
        return _backend.CoreNullAgent()
    return _NullAgent()


def _timed_loop(agent, states, rewards, rng, q_first):
    s = states[0]
    a = agent.select(s, rng)
    t0 = time.process_time()
    for i in range(len(rewards)):
        s2 = states[i + 1]
        r = rewards[i]
        if q_first:
            agent.update(s, a, r, s2, 0)
            agent.observe(s2, r)
            a2 = agent.select(s2, rng)
        else:
            agent.observe(s2, r)
            a2 = agent.select(s2, rng)
            agent.update(s, a, r, s2, a2)
        s, a = s2, a2
    return time.process_time() - t0


@dataclass
class StepCost:
    config: ExperimentConfig
    per_step: float
    baseline: float
    measured_steps: int
    backend: str

    def as_dict(self):
        return {"task": self.config.task, "method": self.config.name, "traces": self.config.traces,
                "backend": self.backend, "per_step_s": self.per_step, "baseline_s": self.baseline,
                "measured_steps": self.measured_steps}


def benchmark_step_cost(config: ExperimentConfig, warmup: int = 1000, measured: int = 10000,
                        backend: str | None = None, seed: int = 0, repeats: int = 3) -> StepCost:
    """Mean CPU seconds per learning step (update + selection), env excluded.

    The environment is replaced by a pre-generated random stream of states and
    rewards; the loop time of a do-nothing agent is subtracted.  The minimum
    over ``repeats`` timings is reported.
    """
    if measured < 1000:
        raise ValueError("measured steps must be >= 1000")
    spec = resolve_task(config.task)
    gen = np.random.default_rng(seed)
    n_states, n_actions = spec.n_states, spec.n_actions
    total = warmup + measured
    states = gen.integers(0, n_states, total + 1).tolist()
    rewards = gen.choice([-1.0, 0.0, 1.0], total).tolist()
    env = make_env(spec, random.Random(seed)) if spec.kind != "sample_model" else None
    codec = env.codec if env is not None else None
    r_max = env.r_max if env is not None else 1.0
    q_first = config.algorithm == "q"
    backend = backend or _backend_arg(config)

    best = math.inf
    base = math.inf
    for rep in range(repeats):
        rng = random.Random(seed + rep)
        agent = make_agent(QTable(n_states, n_actions), codec, config.algorithm, config.learning_params(r_max),
                           config.selection_config(), config.traces, backend)
        _timed_loop(agent, states[:warmup + 1], rewards[:warmup], rng, q_first)
        best = min(best, _timed_loop(agent, states[warmup:], rewards[warmup:], rng, q_first))
        base = min(base, _timed_loop(_null_agent(agent.backend), states[warmup:], rewards[warmup:], rng, q_first))
    per_step = max(best - base, 0.0) / measured
    return StepCost(config, per_step, base / measured, measured, agent.backend)
