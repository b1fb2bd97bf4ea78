"""Protocol session: one scene per connection, lock-step command handling.

The session is transport-agnostic: the TCP server and tests feed it
parsed commands and write back the reply dict.  All internal errors
surface as protocol error replies; nothing raises across the transport
boundary.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..envs import AUX_ENV_IDS, ENV_IDS, make_env
from ..errors import ConfigError, RagmarkError, ShapeMismatch
from ..vec import VecScene
from .protocol import (Command, CloseCmd, GoalCmd, HelloCmd, ProtocolError,
                       ResetCmd, StepCmd, ERR_BAD_SHAPE, ERR_BAD_STATE,
                       ERR_UNKNOWN_ENV, obs_reply, spec_reply, transition_reply)

_session_ids = itertools.count(1)


class SessionState:
    """States: new -> ready (after hello) -> active (after reset)."""

    def __init__(self):
        self.session_id = next(_session_ids)
        self.env_id: str | None = None
        self.n = 0
        self.scene: VecScene | None = None
        self.closed = False
        self.stats = {"steps": 0, "resets": 0}

    # -- command dispatch ---------------------------------------------------

    def handle(self, command: Command) -> dict | None:
        """Returns the reply dict, or None for close."""
        if isinstance(command, HelloCmd):
            return self._hello(command)
        if isinstance(command, ResetCmd):
            return self._reset(command)
        if isinstance(command, StepCmd):
            return self._step(command)
        if isinstance(command, GoalCmd):
            return self._goal(command)
        if isinstance(command, CloseCmd):
            self.closed = True
            return None
        raise ProtocolError(ERR_BAD_STATE, f"unhandled command {command!r}")

    def _hello(self, cmd: HelloCmd) -> dict:
        if self.scene is not None:
            raise ProtocolError(ERR_BAD_STATE, "hello already received")
        if cmd.env not in ENV_IDS + AUX_ENV_IDS:
            raise ProtocolError(ERR_UNKNOWN_ENV, f"unknown environment {cmd.env!r}")
        if cmd.agents < 1:
            raise ProtocolError(ERR_BAD_SHAPE, "agents must be >= 1")
        if cmd.decision_frequency < 1:
            raise ProtocolError(ERR_BAD_SHAPE, "decision_frequency must be >= 1")
        try:
            spec = make_env(cmd.env)
            self.scene = VecScene(spec, n=cmd.agents,
                                  decision_frequency=cmd.decision_frequency,
                                  seed=cmd.seed, wrapper=list(cmd.wrappers))
        except ConfigError as exc:
            raise ProtocolError(ERR_BAD_SHAPE, exc.message) from exc
        self.env_id = cmd.env
        self.n = cmd.agents
        return spec_reply(self.scene.obs_dim, self.scene.act_dim, cmd.agents)

    def _reset(self, cmd: ResetCmd) -> dict:
        scene = self._need_scene()
        tr = scene.vec_reset(seed=cmd.seed)
        self.stats["resets"] += 1
        return obs_reply(tr.obs)

    def _step(self, cmd: StepCmd) -> dict:
        scene = self._need_scene()
        if self.stats["resets"] == 0:
            raise ProtocolError(ERR_BAD_STATE, "step before reset")
        actions = np.asarray(cmd.actions, dtype=np.float64)
        if actions.ndim != 2 or actions.shape != (scene.n, scene.act_dim):
            raise ProtocolError(
                ERR_BAD_SHAPE,
                f"actions must be {scene.n} x {scene.act_dim}, "
                f"got {list(actions.shape)}")
        if not np.all(np.isfinite(actions)):
            raise ProtocolError(ERR_BAD_SHAPE, "actions contain non-finite values")
        try:
            tr = scene.vec_step(actions)
        except (ShapeMismatch, RagmarkError) as exc:
            raise ProtocolError(ERR_BAD_SHAPE, str(exc)) from exc
        self.stats["steps"] += 1
        return transition_reply(tr.obs, tr.rewards, tr.status, tr.reset_flags)

    def _goal(self, cmd: GoalCmd) -> dict:
        from ..tasks.base import CompositeWrapper
        from ..tasks.controller import (ControllerGoal, ControllerWrapper,
                                        DISCRETE_GOALS)
        scene = self._need_scene()
        wrapper = scene.wrapper
        if isinstance(wrapper, CompositeWrapper):
            wrapper = wrapper.find(ControllerWrapper)
        if not isinstance(wrapper, ControllerWrapper):
            raise ProtocolError(ERR_BAD_STATE, "session has no controller wrapper")
        if isinstance(cmd.value, str):
            if wrapper.mode != "discrete":
                raise ProtocolError(ERR_BAD_SHAPE,
                                    "continuous controller takes numeric goals")
            if cmd.value not in DISCRETE_GOALS:
                raise ProtocolError(ERR_BAD_SHAPE,
                                    f"unknown goal {cmd.value!r}; "
                                    f"one of {list(DISCRETE_GOALS)}")
            goal = ControllerGoal(mode="discrete", discrete_goal=cmd.value)
        else:
            if wrapper.mode != "continuous":
                raise ProtocolError(ERR_BAD_SHAPE,
                                    "discrete controller takes named goals")
            v = float(cmd.value)
            if not (-1.0 <= v <= 1.0):
                raise ProtocolError(ERR_BAD_SHAPE, "goal velocity must be in [-1, 1]")
            goal = ControllerGoal(mode="continuous", target_velocity=v)
        for i in range(scene.n):
            wrapper.set_goal(i, goal)
        return {"type": "goal_ack", "value": cmd.value}

    def _need_scene(self) -> VecScene:
        if self.scene is None:
            raise ProtocolError(ERR_BAD_STATE, "hello required first")
        return self.scene
