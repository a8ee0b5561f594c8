"""Named tasks and task-definition files.

=================  ======  =======  ==========================================
task               states  actions  factorization
=================  ======  =======  ==========================================
wander-simple           4        4  front, left sensors (2 levels); 2x2 wheels
wander-1K            1024        9  front/right/back/left (4 levels), heading;
                                    3x3 wheels
wander-4K            4096       25  six sensors (4 levels); 5x5 wheels
3D-arm-1K            1024        9  gripper 8x8x4, object 2x2x1; 2 joints
3D-arm-4K            4096       27  gripper 16x16x4, object 2x2x1; 3 joints
2D-navigation-1K     1024        9  front sensor (4), x 8, y 8, heading; 3x3
=================  ======  =======  ==========================================
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..statespace import InputVariable
from .arm import ArmLattice
from .base import EnvError, Environment
from .grid import GridMap, GridNav, GridWander

GRID_WANDER = "grid_wander"
GRID_NAV = "grid_nav"
ARM_LATTICE = "arm_lattice"
SAMPLE_MODEL = "sample_model"
KINDS = (GRID_WANDER, GRID_NAV, ARM_LATTICE, SAMPLE_MODEL)

ROOM_MAP = """\
######
#....#
#....#
#....#
#.R..#
######
"""

WANDER_MAP = """\
############
#..........#
#..##......#
#..##...#..#
#.......#..#
#....R.....#
#..........#
#.#....##..#
#.#....##..#
#..........#
#......#...#
############
"""

NAV_MAP = """\
.......G
..#.....
..#..#..
.....#..
........
.##.....
........
R.......
"""


@dataclass(frozen=True)
class TaskSpec:
    name: str
    kind: str
    inputs: tuple
    outputs: tuple
    rewards: dict = field(default_factory=dict)
    step_limit: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EnvError(f"unknown environment kind {self.kind!r}; expected one of {KINDS}")

    @property
    def n_states(self) -> int:
        n = 1
        for v in self.inputs:
            n *= v.cardinality
        return n

    @property
    def n_actions(self) -> int:
        n = 1
        for _, c in self.outputs:
            n *= c
        return n


def _wander(name, world_text, sensors, levels, wheels, heading):
    names = {0: "front", 1: "front_right", 2: "right", 4: "back", 6: "left", 7: "front_left"}
    inputs = [InputVariable(names[d], levels) for d in sensors]
    if heading:
        inputs.append(InputVariable("heading", 4))
    return TaskSpec(
        name, GRID_WANDER, tuple(inputs), (("left_wheel", wheels), ("right_wheel", wheels)),
        {"advance": 1.0, "frontal": -10.0, "back": -2.0}, None,
        {"map": world_text, "sensors": tuple(sensors), "sensor_levels": levels, "wheel_levels": wheels,
         "with_heading": heading},
    )


def _arm(name, joints, levels, lattice):
    nx, ny, nz = lattice
    inputs = (InputVariable("grip_x", nx), InputVariable("grip_y", ny), InputVariable("grip_z", nz),
              InputVariable("obj_x", 2), InputVariable("obj_y", 2), InputVariable("obj_z", 1))
    return TaskSpec(name, ARM_LATTICE, inputs, tuple((f"joint{i}", 3) for i in range(joints)),
                    {"goal": 100.0}, 200, {"n_joints": joints, "joint_levels": levels, "lattice": lattice})


def _catalog():
    return {
        "wander-simple": _wander("wander-simple", ROOM_MAP, (0, 6), 2, 2, False),
        "wander-1K": _wander("wander-1K", WANDER_MAP, (0, 2, 4, 6), 4, 3, True),
        "wander-4K": _wander("wander-4K", WANDER_MAP, (0, 1, 2, 4, 6, 7), 4, 5, False),
        "3D-arm-1K": _arm("3D-arm-1K", 2, 16, (8, 8, 4)),
        "3D-arm-4K": _arm("3D-arm-4K", 3, 8, (16, 16, 4)),
        "2D-navigation-1K": TaskSpec(
            "2D-navigation-1K", GRID_NAV,
            (InputVariable("front", 4), InputVariable("x", 8), InputVariable("y", 8), InputVariable("heading", 4)),
            (("left_wheel", 3), ("right_wheel", 3)),
            {"frontal": -10.0, "back": -2.0, "goal": 100.0}, 200,
            {"map": NAV_MAP, "sensors": (0,), "sensor_levels": 4, "wheel_levels": 3},
        ),
    }


CATALOG = _catalog()
TASK_NAMES = tuple(CATALOG)


def catalog_task(name: str) -> TaskSpec:
    try:
        return CATALOG[name]
    except KeyError:
        raise EnvError(f"unknown task {name!r}; known tasks: {', '.join(TASK_NAMES)}") from None


def make_env(spec: TaskSpec, rng: random.Random | None = None, reward_scale: float = 1.0,
             step_limit: int | None = None) -> Environment:
    """Instantiate the environment described by ``spec``.

    ``rng`` is only used by sample-model tasks; ``step_limit`` overrides the
    spec's limit for episodic tasks.
    """
    p = spec.params
    limit = step_limit if step_limit is not None else spec.step_limit
    if spec.kind == GRID_WANDER:
        env = GridWander(GridMap.parse(p["map"]), p["sensors"], p["sensor_levels"], p["wheel_levels"],
                         p.get("with_heading", False), reward_scale=reward_scale)
    elif spec.kind == GRID_NAV:
        env = GridNav(GridMap.parse(p["map"]), p["sensors"], p["sensor_levels"], p["wheel_levels"],
                      step_limit=limit, reward_scale=reward_scale)
    elif spec.kind == ARM_LATTICE:
        env = ArmLattice(p["n_joints"], p["joint_levels"], p["lattice"], step_limit=limit,
                         reward_scale=reward_scale)
    else:
        from ..io import read_sample_model
        from .model import SampleModelEnv

        if rng is None:
            raise EnvError("sample-model tasks need a random generator")
        model = p.get("model_obj") or read_sample_model(p["model"])
        env = SampleModelEnv(model, rng, start_state=p.get("start_state"), hole_policy=p.get("hole_policy", "self_loop"),
                             step_limit=limit)
        if reward_scale != 1.0:
            raise EnvError("reward scaling is not supported for sample-model tasks")
    if env.codec.n_states != spec.n_states or env.n_actions != spec.n_actions:
        raise EnvError(f"task {spec.name!r}: environment is {env.codec.n_states}x{env.n_actions}, "
                       f"spec says {spec.n_states}x{spec.n_actions}")
    return env


def load_task_file(path) -> TaskSpec:
    """Read a task-definition file.

    Either ``base = <catalog task>`` with optional ``map``, ``step_limit`` and
    ``name`` keys, or ``kind = sample_model`` with ``model = <file>`` and
    optional ``hole_policy``, ``start_state``, ``step_limit``.  Relative paths
    resolve against the task file's directory.
    """
    from ..config import ConfigError, parse_kv

    path = Path(path)
    entries = parse_kv(path.read_text(), str(path))
    allowed = {"name", "base", "kind", "map", "model", "hole_policy", "start_state", "step_limit"}
    for key, ent in entries.items():
        if key not in allowed:
            raise ConfigError(f"unknown task key {key!r}", str(path), ent.line)

    def get(key, default=None):
        return entries[key].value if key in entries else default

    def as_int(key):
        ent = entries[key]
        try:
            v = int(ent.value)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {ent.value!r}", str(path), ent.line) from None
        if v < (0 if key == "start_state" else 1):
            raise ConfigError(f"{key} = {v} out of range", str(path), ent.line)
        return v

    limit = as_int("step_limit") if "step_limit" in entries else None
    if get("kind") == SAMPLE_MODEL:
        if "model" not in entries:
            raise ConfigError("sample_model task needs a 'model' key", str(path), entries["kind"].line)
        from ..io import read_sample_model
        from .model import HOLE_POLICIES

        model_path = path.parent / get("model")
        model = read_sample_model(model_path)
        policy = get("hole_policy", "self_loop")
        if policy not in HOLE_POLICIES:
            raise ConfigError(f"hole_policy must be one of {HOLE_POLICIES}", str(path), entries["hole_policy"].line)
        params = {"model": str(model_path), "model_obj": model, "hole_policy": policy}
        if "start_state" in entries:
            params["start_state"] = as_int("start_state")
        return TaskSpec(get("name", model.task), SAMPLE_MODEL, (InputVariable("state", model.n_states),),
                        (("action", model.n_actions),), {}, limit, params)
    if "kind" in entries:
        raise ConfigError(f"kind must be {SAMPLE_MODEL!r} (use 'base' for grid and arm tasks)",
                          str(path), entries["kind"].line)
    if "base" not in entries:
        raise ConfigError("task file needs either 'base' or 'kind = sample_model'", str(path), 1)
    try:
        spec = catalog_task(get("base"))
    except EnvError as e:
        raise ConfigError(str(e), str(path), entries["base"].line) from None
    params = dict(spec.params)
    if "map" in entries:
        if spec.kind not in (GRID_WANDER, GRID_NAV):
            raise ConfigError("'map' only applies to grid tasks", str(path), entries["map"].line)
        params["map"] = (path.parent / get("map")).read_text()
    spec = replace(spec, name=get("name", spec.name), params=params,
                   step_limit=limit if limit is not None else spec.step_limit)
    if spec.kind == GRID_NAV:
        world = GridMap.parse(params["map"])
        h, w = world.shape
        spec = replace(spec, inputs=spec.inputs[:-3] + (
            InputVariable("x", w), InputVariable("y", h), InputVariable("heading", 4)))
    return spec
