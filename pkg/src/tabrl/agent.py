"""Learning agents: one learner + one selection strategy bound to a Q table.

Two interchangeable implementations exist:

* :class:`PyAgent`, built from the reference functions in
  :mod:`tabrl.learning` and :mod:`tabrl.selection`;
* ``tabrl._core.Agent``, a compiled version of the same step, used when the
  extension is importable (see :mod:`tabrl._backend`).

Both consume the same random draws in the same order and produce identical Q
tables for identical inputs.
"""
from __future__ import annotations

from .learning import (
    DUTCH,
    FULL,
    REPLACING,
    LearningError,
    LearningParams,
    QTable,
    ToslCarry,
    TraceRegister,
    q_learning_update,
    retr_capacity,
    sarsa_lambda_update,
    sarsa_update,
    tosl_update,
)
from .selection import (
    EPSILON_GREEDY,
    QBIASSR,
    LrleState,
    SelectionConfig,
    epsilon_greedy_select,
    lrle_buffer_size,
    lrle_step,
    sample_index,
    selection_probs,
)
from .statespace import StateCodec

ALGORITHMS = ("q", "sarsa", "sarsa_lambda", "tosl")
TRACE_KINDS = ("reduced", "full")


def _trace_register(algorithm: str, params: LearningParams, traces: str) -> TraceRegister | None:
    if algorithm not in ("sarsa_lambda", "tosl"):
        return None
    if traces == "full":
        return TraceRegister(FULL)
    return TraceRegister.reduced(params, REPLACING if algorithm == "sarsa_lambda" else DUTCH)


class PyAgent:
    backend = "python"

    def __init__(self, q: QTable, codec: StateCodec | None, algorithm: str, params: LearningParams,
                 selection: SelectionConfig, traces: str = "reduced"):
        _validate(q, codec, algorithm, selection, traces)
        self.q = q
        self.codec = codec
        self.algorithm = algorithm
        self.params = params
        self.selection = selection
        self.trace_kind = traces
        self.traces = _trace_register(algorithm, params, traces)
        self.carry = ToslCarry()
        self.lrle = None
        if selection.lrle_enabled and selection.strategy != EPSILON_GREEDY:
            size = lrle_buffer_size(q.n_states, retr_capacity(params))
            self.lrle = LrleState(size, selection.base_temperature, selection.temperature_cap)

    @property
    def temperature(self) -> float:
        return self.lrle.temperature if self.lrle is not None else self.selection.base_temperature

    def probabilities(self, s: int):
        codec = self.codec if self.selection.strategy == QBIASSR else None
        return selection_probs(self.q, s, self.selection, self.lrle, self.params, codec)

    def select(self, s: int, rng) -> int:
        if self.selection.strategy == EPSILON_GREEDY:
            return epsilon_greedy_select(self.q, s, self.selection, rng)
        return sample_index(self.probabilities(s), rng.random())

    def observe(self, s: int, r: float) -> float:
        if self.lrle is not None:
            return lrle_step(self.lrle, s, r)
        return self.selection.base_temperature

    def update(self, s: int, a: int, r: float, s_next: int, a_next: int, terminal: bool = False) -> float:
        alg = self.algorithm
        if alg == "q":
            return q_learning_update(self.q, s, a, r, s_next, self.params, terminal)
        if alg == "sarsa":
            return sarsa_update(self.q, s, a, r, s_next, a_next, self.params, terminal)
        if alg == "sarsa_lambda":
            return sarsa_lambda_update(self.q, self.traces, s, a, r, s_next, a_next, self.params, terminal)
        return tosl_update(self.q, self.traces, self.carry, s, a, r, s_next, a_next, self.params, terminal)

    def end_episode(self):
        if self.traces is not None:
            self.traces.clear()
        self.carry.reset()
        if self.lrle is not None:
            self.lrle.reset()

    def trace_entries(self) -> list[tuple[int, int, float]]:
        return self.traces.entries() if self.traces is not None else []


def _validate(q, codec, algorithm, selection, traces):
    if algorithm not in ALGORITHMS:
        raise LearningError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if traces not in TRACE_KINDS:
        raise LearningError(f"unknown trace kind {traces!r}; expected one of {TRACE_KINDS}")
    if selection.strategy == QBIASSR:
        if codec is None:
            raise LearningError("Q-biased selection needs a state codec")
        if codec.n_states != q.n_states:
            raise LearningError(f"codec has {codec.n_states} states, Q table {q.n_states}")


def make_agent(q: QTable, codec: StateCodec | None, algorithm: str, params: LearningParams,
               selection: SelectionConfig, traces: str = "reduced", backend: str | None = None):
    """Build an agent on the requested backend (default: fastest available)."""
    from . import _backend

    name = backend or _backend.BACKEND
    if name == "python":
        return PyAgent(q, codec, algorithm, params, selection, traces)
    if name == "cython":
        if _backend.CoreAgent is None:
            raise LearningError("compiled core not available; rebuild the package or use backend='python'")
        _validate(q, codec, algorithm, selection, traces)
        return _backend.build_core_agent(q, codec, algorithm, params, selection, traces)
    raise LearningError(f"unknown backend {name!r}")
