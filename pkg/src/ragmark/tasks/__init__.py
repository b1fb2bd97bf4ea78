from .base import CompositeWrapper, TaskWrapper, make_wrapper, make_wrapper_stack
from .controller import (ControllerGoal, ControllerWrapper, DISCRETE_GOALS,
                         controller_observation, controller_reward, sample_goal)
from .imitation import (ImitationWrapper, MotionFrame, ReferenceMotion,
                        imitation_reward, imitation_terminate, load_motion_file,
                        parse_motion_text, pendulum_swing_motion, sample_reference,
                        serialize_motion, walker_gait_motion)
from .terrain_gen import (TerrainAdversary, TerrainChallenge, TerrainTaskWrapper,
                          adversarial_update, generate_terrain, height_observation,
                          propose_challenge)

__all__ = [
    "CompositeWrapper", "TaskWrapper", "make_wrapper", "make_wrapper_stack", "ControllerGoal", "ControllerWrapper",
    "DISCRETE_GOALS", "controller_observation", "controller_reward", "sample_goal",
    "ImitationWrapper", "MotionFrame", "ReferenceMotion", "imitation_reward",
    "imitation_terminate", "load_motion_file", "parse_motion_text",
    "pendulum_swing_motion", "sample_reference", "serialize_motion",
    "walker_gait_motion", "TerrainAdversary", "TerrainChallenge",
    "TerrainTaskWrapper", "adversarial_update", "generate_terrain",
    "height_observation", "propose_challenge",
]
