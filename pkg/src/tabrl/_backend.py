"""Pick the agent implementation at import time.

The compiled core (``tabrl._core``) is used when it was built; setting
``TABRL_BACKEND=python`` forces the pure-Python agent.
"""
import os

from .learning import DUTCH, REPLACING, retr_capacity
from .selection import EPSILON_GREEDY, lrle_buffer_size, normalization_factor

try:
    from ._core import Agent as CoreAgent
    from ._core import NullAgent as CoreNullAgent
except ImportError:  # extension not built
    CoreAgent = CoreNullAgent = None

BACKEND = "cython" if CoreAgent is not None and os.environ.get("TABRL_BACKEND", "").lower() != "python" else "python"


def available() -> list[str]:
    return ["python"] + (["cython"] if CoreAgent is not None else [])


def build_core_agent(q, codec, algorithm, params, selection, traces):
    if algorithm in ("q", "sarsa"):
        kind = "none"
    elif traces == "full":
        kind = "dense"
    else:
        kind = REPLACING if algorithm == "sarsa_lambda" else DUTCH
    threshold = params.trace_threshold if kind == REPLACING else 0.0
    capacity = retr_capacity(params) + 1
    lrle = bool(selection.lrle_enabled) and selection.strategy != EPSILON_GREEDY
    lrle_size = lrle_buffer_size(q.n_states, retr_capacity(params))
    cards = codec.cardinalities if codec is not None else (q.n_states,)
    radices = codec.radices if codec is not None else (1,)
    factor = normalization_factor(params) if selection.normalize else 1.0
    return CoreAgent(
        q, algorithm, params.alpha, params.gamma, params.lam, kind, capacity, threshold,
        selection.strategy, selection.epsilon, selection.base_temperature, selection.temperature_cap,
        factor, bool(selection.normalize), lrle, lrle_size, cards, radices,
    )
