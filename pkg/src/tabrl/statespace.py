"""Factored state and action spaces.

States are tuples of discretized input-variable levels packed into a dense
index with mixed-radix encoding (first variable = most significant digit).
For every state and variable the codec also knows the *sibling set*: the
states that agree with it on every other variable.  Q-biased selection
averages Q rows over those sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np

# sibling tables above this many entries are built lazily, per state
DEFAULT_SIBLING_BUDGET = 64 * 1024 * 1024
MAX_INDEX = np.iinfo(np.int64).max


class SpaceError(ValueError):
    """Invalid variable definition or out-of-range index."""


@dataclass(frozen=True)
class InputVariable:
    name: str
    cardinality: int
    level_labels: tuple | None = None

    def __post_init__(self):
        if int(self.cardinality) != self.cardinality or self.cardinality < 1:
            raise SpaceError(f"variable {self.name!r}: cardinality must be a positive integer")
        if self.level_labels is not None:
            labels = tuple(self.level_labels)
            if len(labels) != self.cardinality:
                raise SpaceError(
                    f"variable {self.name!r}: {len(labels)} labels for cardinality {self.cardinality}"
                )
            if len(set(labels)) != len(labels):
                raise SpaceError(f"variable {self.name!r}: duplicate level labels")
            object.__setattr__(self, "level_labels", labels)

    def level_of(self, label) -> int:
        if self.level_labels is None:
            raise SpaceError(f"variable {self.name!r} has no level labels")
        try:
            return self.level_labels.index(label)
        except ValueError:
            raise SpaceError(f"variable {self.name!r}: unknown label {label!r}") from None


def _radices(cards: Sequence[int]) -> tuple[int, ...]:
    out = [1] * len(cards)
    for i in range(len(cards) - 2, -1, -1):
        out[i] = out[i + 1] * cards[i + 1]
    return tuple(out)


@dataclass(frozen=True)
class ActionSpace:
    """Composite actions over output variables (e.g. one speed per wheel)."""

    output_variables: tuple[tuple[str, int], ...]
    n_actions: int = field(init=False)
    radices: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        outs = tuple((str(n), int(c)) for n, c in self.output_variables)
        if not outs:
            raise SpaceError("action space needs at least one output variable")
        for name, card in outs:
            if card < 1:
                raise SpaceError(f"output variable {name!r}: cardinality must be >= 1")
        object.__setattr__(self, "output_variables", outs)
        object.__setattr__(self, "n_actions", prod(c for _, c in outs))
        object.__setattr__(self, "radices", _radices([c for _, c in outs]))

    def encode(self, levels: Sequence[int]) -> int:
        if len(levels) != len(self.output_variables):
            raise SpaceError(f"expected {len(self.output_variables)} output levels, got {len(levels)}")
        idx = 0
        for lv, (name, card), rad in zip(levels, self.output_variables, self.radices):
            if not 0 <= lv < card:
                raise SpaceError(f"output {name!r}: level {lv} outside [0, {card})")
            idx += lv * rad
        return idx

    def decode(self, action: int) -> tuple[int, ...]:
        if not 0 <= action < self.n_actions:
            raise SpaceError(f"action {action} outside [0, {self.n_actions})")
        return tuple((action // rad) % card for rad, (_, card) in zip(self.radices, self.output_variables))


class StateCodec:
    """Bijection between level tuples and dense state indices.

    Immutable once built; safe to share between learning runs.
    """

    def __init__(self, variables: Sequence[InputVariable], sibling_budget: int = DEFAULT_SIBLING_BUDGET):
        variables = tuple(variables)
        if not variables:
            raise SpaceError("a state space needs at least one input variable")
        cards = tuple(v.cardinality for v in variables)
        n = 1
        for c in cards:
            n *= c
            if n > MAX_INDEX:
                raise SpaceError("product of cardinalities overflows the state index type")
        self.variables = variables
        self.cardinalities = cards
        self.n_states = n
        self.n_vars = len(variables)
        self.radices = _radices(cards)
        # offsets of each variable's block inside a concatenated sibling row
        self.sibling_offsets = tuple(np.concatenate([[0], np.cumsum(cards)]).tolist())
        self._lazy: dict[int, np.ndarray] | None = None
        self._table: np.ndarray | None = None
        if n * self.n_vars <= sibling_budget:
            self._table = self._build_table()
        else:
            self._lazy = {}

    def __repr__(self):
        vs = ", ".join(f"{v.name}:{v.cardinality}" for v in self.variables)
        return f"StateCodec({vs})"

    def _build_table(self) -> np.ndarray:
        states = np.arange(self.n_states, dtype=np.int64)
        blocks = []
        for card, rad in zip(self.cardinalities, self.radices):
            base = states - ((states // rad) % card) * rad
            blocks.append(base[:, None] + np.arange(card, dtype=np.int64)[None, :] * rad)
        table = np.concatenate(blocks, axis=1)
        table.setflags(write=False)
        return table

    def _row(self, s: int) -> np.ndarray:
        if self._table is not None:
            return self._table[s]
        row = self._lazy.get(s)
        if row is None:
            parts = []
            for card, rad in zip(self.cardinalities, self.radices):
                base = s - ((s // rad) % card) * rad
                parts.append(base + np.arange(card, dtype=np.int64) * rad)
            row = np.concatenate(parts)
            row.setflags(write=False)
            self._lazy[s] = row
        return row

    @property
    def precomputed(self) -> bool:
        return self._table is not None

    def encode(self, values: Sequence[int]) -> int:
        if len(values) != self.n_vars:
            raise SpaceError(f"expected {self.n_vars} levels, got {len(values)}")
        idx = 0
        for lv, card, rad in zip(values, self.cardinalities, self.radices):
            if not 0 <= lv < card:
                raise SpaceError(f"level {lv} outside [0, {card})")
            idx += lv * rad
        return idx

    def decode(self, s: int) -> tuple[int, ...]:
        self._check_state(s)
        return tuple((s // rad) % card for card, rad in zip(self.cardinalities, self.radices))

    def sibling_set(self, s: int, i: int) -> list[int]:
        """States equal to ``s`` on every variable except variable ``i`` (ascending, includes ``s``)."""
        self._check_state(s)
        if not 0 <= i < self.n_vars:
            raise SpaceError(f"variable index {i} outside [0, {self.n_vars})")
        lo, hi = self.sibling_offsets[i], self.sibling_offsets[i + 1]
        return self._row(s)[lo:hi].tolist()

    def sibling_row(self, s: int) -> np.ndarray:
        """All sibling sets of ``s`` concatenated in variable order."""
        self._check_state(s)
        return self._row(s)

    def _check_state(self, s: int):
        if not 0 <= s < self.n_states:
            raise SpaceError(f"state {s} outside [0, {self.n_states})")


def build_codec(variables: Sequence[InputVariable], sibling_budget: int = DEFAULT_SIBLING_BUDGET) -> StateCodec:
    return StateCodec(variables, sibling_budget)


def encode_state(codec: StateCodec, values: Sequence[int]) -> int:
    return codec.encode(values)


def sibling_set(codec: StateCodec, s: int, i: int) -> list[int]:
    return codec.sibling_set(s, i)
