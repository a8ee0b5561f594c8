from .arm import ArmLattice, arm_lattice_step
from .base import EnvError, Environment, Observation
from .catalog import TASK_NAMES, TaskSpec, catalog_task, load_task_file, make_env
from .grid import GridMap, GridNav, GridWander, grid_nav_step, grid_wander_step
from .model import ModelHole, SampleModel, SampleModelEnv, build_sample_model, sample_model_step

__all__ = [
    "ArmLattice", "EnvError", "Environment", "GridMap", "GridNav", "GridWander", "ModelHole", "Observation",
    "SampleModel", "SampleModelEnv", "TASK_NAMES", "TaskSpec", "build_sample_model", "catalog_task",
    "load_task_file", "make_env", "sample_model_step", "arm_lattice_step", "grid_nav_step", "grid_wander_step",
]
