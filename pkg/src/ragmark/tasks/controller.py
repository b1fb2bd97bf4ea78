"""Goal-conditioned player-controller task.

Training samples goals the way a player would press them: discrete
direction 40% left / 40% right / 20% stationary with an independent 25%
chance of a jump variant, or a continuous target velocity uniform in
[-1, 1].  Goals hold for a uniformly drawn horizon of 40..240 decision
steps.  The base forward-velocity reward term is replaced by a velocity
tracking term; jump goals add a brief upward-velocity bonus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import TaskWrapper

DISCRETE_GOALS = ("left", "right", "stationary", "jump", "jump_left", "jump_right")

V_MAX = 2.0          # m/s mapped to |target| = 1
W_JUMP = 0.5
JUMP_WINDOW_S = 1.0
RESAMPLE_LO = 40
RESAMPLE_HI = 240

_TARGETS = {"left": -1.0, "right": 1.0, "stationary": 0.0,
            "jump": 0.0, "jump_left": -1.0, "jump_right": 1.0}


@dataclass
class ControllerGoal:
    mode: str                      # discrete | continuous
    target_velocity: float = 0.0   # continuous mode, in [-1, 1]
    discrete_goal: str = "stationary"
    steps_until_resample: int = RESAMPLE_HI

    @property
    def target(self) -> float:
        """Normalized target velocity in [-1, 1] for either mode."""
        if self.mode == "continuous":
            return self.target_velocity
        return _TARGETS[self.discrete_goal]

    @property
    def jumping(self) -> bool:
        return self.mode == "discrete" and self.discrete_goal.startswith("jump")


def sample_goal(mode: str, rng: np.random.Generator) -> ControllerGoal:
    horizon = int(rng.integers(RESAMPLE_LO, RESAMPLE_HI + 1))
    if mode == "continuous":
        return ControllerGoal(mode="continuous",
                              target_velocity=float(rng.uniform(-1.0, 1.0)),
                              steps_until_resample=horizon)
    r = rng.random()
    if r < 0.4:
        goal = "left"
    elif r < 0.8:
        goal = "right"
    else:
        goal = "stationary"
    if rng.random() < 0.25:
        goal = {"left": "jump_left", "right": "jump_right", "stationary": "jump"}[goal]
    return ControllerGoal(mode="discrete", discrete_goal=goal,
                          steps_until_resample=horizon)


def tracking_term(v_x: float, target: float, w_velocity: float) -> float:
    """w_velocity * (v_max - |v_x - target*v_max|) / v_max."""
    return w_velocity * (V_MAX - abs(v_x - target * V_MAX)) / V_MAX


def controller_reward(inst, goal: ControllerGoal,
                      jump_elapsed_s: float | None = None) -> float:
    """Base reward with the velocity term swapped for goal tracking."""
    terms = inst.reward_terms()
    w = inst.spec.reward_weights
    terms["velocity"] = tracking_term(inst.pelvis_velocity_x(), goal.target, w.w_velocity)
    if goal.jumping and jump_elapsed_s is not None and jump_elapsed_s <= JUMP_WINDOW_S:
        vy = float(inst.batch.linvel[inst.index, inst.spec.cm.pelvis_index, 1])
        terms["jump"] = W_JUMP * max(0.0, vy)
    return float(sum(terms.values()))


def controller_observation(base_obs: np.ndarray, goal: ControllerGoal) -> np.ndarray:
    return np.concatenate([base_obs, goal_encoding(goal)])


def goal_encoding(goal: ControllerGoal) -> np.ndarray:
    if goal.mode == "continuous":
        return np.array([goal.target_velocity])
    onehot = np.zeros(len(DISCRETE_GOALS))
    onehot[DISCRETE_GOALS.index(goal.discrete_goal)] = 1.0
    return onehot


class ControllerWrapper(TaskWrapper):
    def __init__(self, mode: str = "discrete", resample: bool = True):
        self.mode = mode
        self.resample = resample
        self.goals: dict[int, ControllerGoal] = {}
        self.goal_age_s: dict[int, float] = {}
        self.forced: dict[int, ControllerGoal] = {}

    def obs_extension_dim(self) -> int:
        return 1 if self.mode == "continuous" else len(DISCRETE_GOALS)

    def set_goal(self, i: int, goal: ControllerGoal) -> None:
        """External (player) override; holds until the next override."""
        self.forced[i] = goal
        self.goals[i] = goal
        self.goal_age_s[i] = 0.0

    def post_reset(self, i: int, inst) -> None:
        if i in self.forced:
            self.goals[i] = self.forced[i]
        else:
            self.goals[i] = sample_goal(self.mode, inst.rng)
        self.goal_age_s[i] = 0.0

    def extend_observation(self, i: int, inst) -> np.ndarray:
        return goal_encoding(self.goals[i])

    def reward(self, i: int, inst, base_reward: float) -> float:
        return controller_reward(inst, self.goals[i], self.goal_age_s[i])

    def on_physics_advanced(self, i: int, inst) -> None:
        self.goal_age_s[i] += self.scene.decision_dt

    def on_decision(self, i: int, inst) -> None:
        if i in self.forced or not self.resample:
            return
        g = self.goals[i]
        g.steps_until_resample -= 1
        if g.steps_until_resample <= 0:
            self.goals[i] = sample_goal(self.mode, inst.rng)
            self.goal_age_s[i] = 0.0
