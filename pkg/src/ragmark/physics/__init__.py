from .config import PhysicsConfig
from .terrain import Terrain, query_height
from .compiled import CompiledModel, compile_model
from .scene import (
    ContactSet,
    RigidState,
    SceneBatch,
    SceneState,
    apply_motor,
    forward_kinematics,
    init_scene,
    project_planar,
    step_physics,
)

__all__ = [
    "PhysicsConfig", "Terrain", "query_height", "CompiledModel", "compile_model",
    "ContactSet", "RigidState", "SceneBatch", "SceneState", "apply_motor",
    "forward_kinematics", "init_scene", "project_planar", "step_physics",
]
