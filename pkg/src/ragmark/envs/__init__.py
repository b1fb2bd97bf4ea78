from .spec import (AUX_ENV_IDS, ENV_IDS, PUBLISHED_ACT_DIMS, EnvSpec, RewardWeights,
                   TerminationParams, make_env)
from .instance import (EnvInstance, STATUS_RUNNING, STATUS_TERMINATED,
                       STATUS_TRUNCATED, get_effort, joints_at_limit_count,
                       observe_batch, on_terrain_collision, phase_bonus, tilt,
                       uprightness)

__all__ = [
    "AUX_ENV_IDS", "ENV_IDS", "PUBLISHED_ACT_DIMS", "EnvSpec", "RewardWeights",
    "TerminationParams", "make_env", "EnvInstance", "STATUS_RUNNING",
    "STATUS_TERMINATED", "STATUS_TRUNCATED", "get_effort",
    "joints_at_limit_count", "observe_batch", "on_terrain_collision",
    "phase_bonus", "tilt", "uprightness",
]
