"""Occupancy-grid mobile robot: wandering and point-to-point navigation.

The robot sits on a cell with one of four headings (0=N, 1=E, 2=S, 3=W) and
drives two wheels.  A wheel-level pair ``(l, r)`` maps to a quarter-turn
rotation by ``sign(r - l)`` (two quarters when ``|r - l| > 2``), followed by a
translation of ``sign(l + r)`` cells (two cells when ``|l + r| > 2``).

Range sensors cast rays in one of eight directions relative to the heading
(0 = front, 2 = right, 4 = back, 6 = left, odd values diagonal) and report the
number of free cells before the first obstacle, capped at ``levels - 1``.
Cells outside the map count as obstacles.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..statespace import ActionSpace, InputVariable, StateCodec
from .base import EnvError, Environment

# (drow, dcol) for the four headings and the eight ray directions
HEADING_STEPS = ((-1, 0), (0, 1), (1, 0), (0, -1))
RAY_STEPS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))

WHEEL_LEVELS = {2: (-1, 1), 3: (-1, 0, 1), 5: (-2, -1, 0, 1, 2)}

ADVANCE_REWARD = 1.0
FRONTAL_PENALTY = -10.0
BACK_PENALTY = -2.0
GOAL_BONUS = 100.0


@dataclass(frozen=True)
class GridMap:
    """Parsed text map: ``#`` obstacle, ``.`` free, ``R`` start, ``G`` target."""

    blocked: np.ndarray
    start: tuple[int, int]
    target: tuple[int, int] | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.blocked.shape

    def free(self, row: int, col: int) -> bool:
        h, w = self.blocked.shape
        return 0 <= row < h and 0 <= col < w and not self.blocked[row, col]

    @classmethod
    def parse(cls, text: str) -> "GridMap":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith(";")]
        if not lines:
            raise EnvError("empty map")
        width = len(lines[0])
        start = target = None
        blocked = np.zeros((len(lines), width), dtype=bool)
        for i, ln in enumerate(lines):
            if len(ln) != width:
                raise EnvError(f"map row {i + 1} has width {len(ln)}, expected {width}")
            for j, ch in enumerate(ln):
                if ch == "#":
                    blocked[i, j] = True
                elif ch == "R":
                    if start is not None:
                        raise EnvError("map has more than one start cell 'R'")
                    start = (i, j)
                elif ch == "G":
                    if target is not None:
                        raise EnvError("map has more than one target cell 'G'")
                    target = (i, j)
                elif ch != ".":
                    raise EnvError(f"map row {i + 1}: unknown cell {ch!r}")
        if start is None:
            raise EnvError("map has no start cell 'R'")
        blocked.setflags(write=False)
        return cls(blocked, start, target)

    @classmethod
    def load(cls, path) -> "GridMap":
        return cls.parse(Path(path).read_text())


def ray_length(world: GridMap, row: int, col: int, direction: int, limit: int) -> int:
    """Free cells from (row, col) along ``direction`` (absolute, 0..7), at most ``limit``."""
    dr, dc = RAY_STEPS[direction % 8]
    n = 0
    while n < limit and world.free(row + dr * (n + 1), col + dc * (n + 1)):
        n += 1
    return n


def _magnitude(v: int) -> int:
    if v == 0:
        return 0
    step = 2 if abs(v) > 2 else 1
    return step if v > 0 else -step


def drive(world: GridMap, row: int, col: int, heading: int, left: int, right: int):
    """Apply one wheel command.

    Returns ``(row, col, heading, cells_moved, cells_requested)``; movement
    stops at the first blocked cell.
    """
    heading = (heading - _magnitude(right - left)) % 4
    cells = _magnitude(left + right)
    dr, dc = HEADING_STEPS[heading]
    if cells < 0:
        dr, dc = -dr, -dc
    moved = 0
    while moved < abs(cells) and world.free(row + dr, col + dc):
        row += dr
        col += dc
        moved += 1
    return row, col, heading, moved, cells


def motion_reward(moved: int, requested: int) -> float:
    if requested > 0:
        return ADVANCE_REWARD if moved == requested else FRONTAL_PENALTY
    if requested < 0 and moved != -requested:
        return BACK_PENALTY
    return 0.0


class _GridRobot(Environment):
    def __init__(self, world: GridMap, sensors: tuple[int, ...], sensor_levels: int, wheel_levels: int,
                 start_heading: int = 0, reward_scale: float = 1.0):
        super().__init__()
        if world.blocked[world.start]:
            raise EnvError("robot starts on an obstacle")
        if wheel_levels not in WHEEL_LEVELS:
            raise EnvError(f"wheel levels must be one of {sorted(WHEEL_LEVELS)}, got {wheel_levels}")
        if sensor_levels < 2:
            raise EnvError("sensors need at least 2 levels")
        if not 0 <= start_heading < 4:
            raise EnvError(f"heading {start_heading} outside [0, 4)")
        if not reward_scale > 0:
            raise EnvError("reward scale must be positive")
        self.world = world
        self.sensors = tuple(int(d) % 8 for d in sensors)
        self.sensor_levels = sensor_levels
        self.speeds = WHEEL_LEVELS[wheel_levels]
        self.start_heading = start_heading
        self.reward_scale = float(reward_scale)
        self.actions = ActionSpace((("left_wheel", wheel_levels), ("right_wheel", wheel_levels)))
        self.row, self.col = world.start
        self.heading = start_heading

    def _sensor_values(self) -> tuple[int, ...]:
        cap = self.sensor_levels - 1
        return tuple(ray_length(self.world, self.row, self.col, 2 * self.heading + d, cap) for d in self.sensors)

    def set_pose(self, row: int, col: int, heading: int):
        if not self.world.free(row, col):
            raise EnvError(f"cell ({row}, {col}) is not free")
        self.row, self.col, self.heading = row, col, heading % 4

    def _reset(self):
        self.row, self.col = self.world.start
        self.heading = self.start_heading
        return self.observe()

    def _drive(self, action: int):
        li, ri = self.actions.decode(action)
        self.row, self.col, self.heading, moved, req = drive(
            self.world, self.row, self.col, self.heading, self.speeds[li], self.speeds[ri])
        return moved, req


class GridWander(_GridRobot):
    """Non-episodic obstacle avoidance; state = sensor levels (+ heading)."""

    def __init__(self, world: GridMap, sensors=(0, 6), sensor_levels: int = 2, wheel_levels: int = 2,
                 with_heading: bool = False, start_heading: int = 0, reward_scale: float = 1.0):
        super().__init__(world, sensors, sensor_levels, wheel_levels, start_heading, reward_scale)
        names = {0: "front", 1: "front_right", 2: "right", 3: "back_right",
                 4: "back", 5: "back_left", 6: "left", 7: "front_left"}
        variables = [InputVariable(names[d], sensor_levels) for d in self.sensors]
        if with_heading:
            variables.append(InputVariable("heading", 4))
        self.with_heading = with_heading
        self.codec = StateCodec(variables)
        self.r_max = abs(FRONTAL_PENALTY) * self.reward_scale
        self.step_limit = None

    def observe(self):
        vals = self._sensor_values()
        return vals + (self.heading,) if self.with_heading else vals

    def _step(self, action):
        moved, req = self._drive(action)
        return self.observe(), motion_reward(moved, req) * self.reward_scale, False


class GridNav(_GridRobot):
    """Episodic navigation to the map's ``G`` cell; state = sensors, X, Y, heading."""

    def __init__(self, world: GridMap, sensors=(0,), sensor_levels: int = 4, wheel_levels: int = 3,
                 step_limit: int = 200, start_heading: int = 0, reward_scale: float = 1.0):
        super().__init__(world, sensors, sensor_levels, wheel_levels, start_heading, reward_scale)
        if world.target is None:
            raise EnvError("navigation map has no target cell 'G'")
        if world.blocked[world.target]:
            raise EnvError("target cell is an obstacle")
        if step_limit < 1:
            raise EnvError("step limit must be >= 1")
        h, w = world.shape
        names = ("front", "front_right", "right", "back_right", "back", "back_left", "left", "front_left")
        variables = [InputVariable(names[d], sensor_levels) for d in self.sensors]
        variables += [InputVariable("x", w), InputVariable("y", h), InputVariable("heading", 4)]
        self.codec = StateCodec(variables)
        self.step_limit = step_limit
        max_cells = 2 if wheel_levels == 5 else 1
        self.r_max = max(GOAL_BONUS + max_cells, abs(FRONTAL_PENALTY) + max_cells) * self.reward_scale

    def distance(self) -> int:
        tr, tc = self.world.target
        return abs(self.row - tr) + abs(self.col - tc)

    def observe(self):
        return self._sensor_values() + (self.col, self.row, self.heading)

    def _step(self, action):
        before = self.distance()
        moved, req = self._drive(action)
        after = self.distance()
        # only the collision part of the wander reward; progress is the distance term
        r = (before - after) + min(motion_reward(moved, req), 0.0)
        done = (self.row, self.col) == self.world.target
        if done:
            r += GOAL_BONUS
        return self.observe(), r * self.reward_scale, done


def grid_wander_step(env: GridWander, action: int):
    return env.step(action)


def grid_nav_step(env: GridNav, action: int):
    return env.step(action)
