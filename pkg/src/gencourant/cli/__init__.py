"""Scene files, residual checks and the ``gencourant`` command."""

from .checks import COMMANDS, CheckError, EvaluationError, ResidualReport, run_check
from .scenefile import SceneError, fixture_path, list_fixtures, load_fixture, load_scene, scene_from_dict

__all__ = [
    "COMMANDS",
    "CheckError",
    "EvaluationError",
    "ResidualReport",
    "SceneError",
    "fixture_path",
    "list_fixtures",
    "load_fixture",
    "load_scene",
    "run_check",
    "scene_from_dict",
]
