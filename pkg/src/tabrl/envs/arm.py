"""Joint-space arm reaching for an object on a lattice.

Joint 0 is a base yaw covering a full turn; the remaining joints pitch the
links up from the table.  Forward kinematics places the gripper in a
continuous box that is binned onto an ``nx x ny x nz`` lattice centred on
the base.  The object sits on a lattice cell chosen once per quadrant of
the table; episodes cycle through the quadrants.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from ..statespace import ActionSpace, InputVariable, StateCodec
from .base import EnvError, Environment

GOAL_BONUS = 100.0
INCREMENTS = (-1, 0, 1)


def _pitch_ranges(n_joints: int):
    # shoulder sweeps 0..90 deg; an elbow folds back down by up to 135 deg
    if n_joints == 2:
        return [(0.0, math.pi / 2)]
    return [(0.0, math.pi / 2), (-0.75 * math.pi, 0.0)]


class ArmLattice(Environment):
    def __init__(self, n_joints: int = 2, joint_levels: int = 16, lattice=(8, 8, 4), object_bins=(2, 2, 1),
                 step_limit: int = 200, reward_scale: float = 1.0):
        super().__init__()
        if n_joints not in (2, 3):
            raise EnvError(f"arm needs 2 or 3 joints, got {n_joints}")
        if joint_levels < 2:
            raise EnvError("joints need at least 2 angle levels")
        if len(lattice) != 3 or min(lattice) < 1:
            raise EnvError(f"bad lattice {lattice!r}")
        if tuple(object_bins)[:2] != (2, 2) or object_bins[2] != 1:
            raise EnvError("object bins must be (2, 2, 1): one object site per table quadrant")
        if step_limit < 1:
            raise EnvError("step limit must be >= 1")
        self.n_joints = n_joints
        self.joint_levels = joint_levels
        self.lattice = tuple(int(v) for v in lattice)
        self.step_limit = step_limit
        self.reward_scale = float(reward_scale)
        nx, ny, nz = self.lattice
        self.codec = StateCodec([
            InputVariable("grip_x", nx), InputVariable("grip_y", ny), InputVariable("grip_z", nz),
            InputVariable("obj_x", 2), InputVariable("obj_y", 2), InputVariable("obj_z", 1),
        ])
        self.actions = ActionSpace(tuple((f"joint{i}", 3) for i in range(n_joints)))
        self._cells = self._tabulate()
        self.sites = self._object_sites()
        self.home = tuple(joint_levels // 2 for _ in range(n_joints))
        self.joints = self.home
        self.site = 0
        self.r_max = self._max_abs_reward()

    # kinematics -----------------------------------------------------------

    def _angles(self, joints):
        L = self.joint_levels
        yaw = 2 * math.pi * joints[0] / L
        pitches = []
        for q, (lo, hi) in zip(joints[1:], _pitch_ranges(self.n_joints)):
            pitches.append(lo + (hi - lo) * q / (L - 1))
        return yaw, pitches

    def _position(self, joints):
        yaw, pitches = self._angles(joints)
        links = (1.0,) if self.n_joints == 2 else (0.55, 0.45)
        reach = height = acc = 0.0
        for length, p in zip(links, pitches):
            acc += p
            reach += length * math.cos(acc)
            height += length * math.sin(acc)
        return reach * math.cos(yaw), reach * math.sin(yaw), height

    def cell_of(self, joints) -> tuple[int, int, int]:
        x, y, z = self._position(joints)
        nx, ny, nz = self.lattice

        def bin_(v, lo, hi, n):
            return min(n - 1, max(0, int(math.floor((v - lo) / (hi - lo) * n))))

        return bin_(x, -1.0, 1.0, nx), bin_(y, -1.0, 1.0, ny), bin_(z, 0.0, 1.0, nz)

    def _tabulate(self):
        L = self.joint_levels
        cells = {}
        for joints in itertools.product(range(L), repeat=self.n_joints):
            cells[joints] = self.cell_of(joints)
        return cells

    def _object_sites(self):
        nx, ny, _ = self.lattice
        reachable = sorted(set(self._cells.values()))
        sites = []
        for qx, qy in itertools.product((0, 1), repeat=2):
            quad = [c for c in reachable if (c[0] >= nx // 2) == qx and (c[1] >= ny // 2) == qy]
            table = [c for c in quad if c[2] == 0] or quad
            if not table:
                raise EnvError(f"no reachable cell in table quadrant {(qx, qy)}")
            sites.append((table[len(table) // 2], (qx, qy)))
        return sites

    def _max_abs_reward(self):
        best = GOAL_BONUS
        for joints, cell in self._cells.items():
            for inc in itertools.product(INCREMENTS, repeat=self.n_joints):
                nxt = self._cells[self._apply(joints, inc)]
                for target, _ in self.sites:
                    r = _dist(cell, target) - _dist(nxt, target)
                    if nxt == target:
                        r += GOAL_BONUS
                    best = max(best, abs(r))
        return best * self.reward_scale

    def _apply(self, joints, inc):
        top = self.joint_levels - 1
        return tuple(min(top, max(0, q + d)) for q, d in zip(joints, inc))

    # episode ----------------------------------------------------------------

    @property
    def target(self):
        return self.sites[self.site][0]

    def set_joints(self, joints):
        joints = tuple(int(q) for q in joints)
        if len(joints) != self.n_joints or not all(0 <= q < self.joint_levels for q in joints):
            raise EnvError(f"invalid joint configuration {joints!r}")
        self.joints = joints

    def observe(self):
        return self._cells[self.joints] + self.sites[self.site][1] + (0,)

    def _reset(self):
        # first reset keeps site 0, later ones cycle through the quadrants
        self.site = (self.episodes - 1) % len(self.sites)
        self.joints = self.home
        if self._cells[self.joints] == self.target:
            raise EnvError("home configuration already touches the object")
        return self.observe()

    def _step(self, action):
        inc = tuple(INCREMENTS[i] for i in self.actions.decode(action))
        before = _dist(self._cells[self.joints], self.target)
        self.joints = self._apply(self.joints, inc)
        cell = self._cells[self.joints]
        r = before - _dist(cell, self.target)
        done = cell == self.target
        if done:
            r += GOAL_BONUS
        return self.observe(), r * self.reward_scale, done


def _dist(a, b) -> float:
    return math.sqrt(sum((u - v) ** 2 for u, v in zip(a, b)))


def reachable_cells(env: ArmLattice) -> np.ndarray:
    return np.array(sorted(set(env._cells.values())), dtype=np.int64)


def arm_lattice_step(env: ArmLattice, action: int):
    return env.step(action)
