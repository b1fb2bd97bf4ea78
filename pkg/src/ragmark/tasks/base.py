"""Wrapper protocol layered over the vectorized scene.

A wrapper owns per-instance task state (goals, motion clocks, terrain
challenges) and hooks into reset, reward, termination, observation and
the per-decision tick.  Wrappers are constructed from short descriptors
("controller:discrete", "imitation:walker-gait", "terrain") so protocol
clients can request them in the hello message.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError


class TaskWrapper:
    """Default no-op hooks; subclasses override what they need."""

    def bind(self, scene) -> None:
        self.scene = scene

    def obs_extension_dim(self) -> int:
        return 0

    def pre_reset(self, i: int, inst) -> None:
        pass

    def post_reset(self, i: int, inst) -> None:
        pass

    def extend_observation(self, i: int, inst) -> np.ndarray:
        return np.zeros(0)

    def on_physics_advanced(self, i: int, inst) -> None:
        """Clock bookkeeping; runs after the substeps, before rewards."""

    def reward(self, i: int, inst, base_reward: float) -> float:
        return base_reward

    def terminate(self, i: int, inst, base_status: str) -> str:
        return base_status

    def on_decision(self, i: int, inst) -> None:
        """Post-reward tick for surviving instances (goal resampling)."""


class CompositeWrapper(TaskWrapper):
    """Applies a stack of wrappers in order; observation extensions
    concatenate, rewards and termination chain."""

    def __init__(self, wrappers: list[TaskWrapper], descriptors: list[str]):
        self.wrappers = wrappers
        self.descriptors = descriptors

    def bind(self, scene) -> None:
        super().bind(scene)
        for w in self.wrappers:
            w.bind(scene)

    def obs_extension_dim(self) -> int:
        return sum(w.obs_extension_dim() for w in self.wrappers)

    def pre_reset(self, i, inst) -> None:
        for w in self.wrappers:
            w.pre_reset(i, inst)

    def post_reset(self, i, inst) -> None:
        for w in self.wrappers:
            w.post_reset(i, inst)

    def extend_observation(self, i, inst) -> np.ndarray:
        parts = [w.extend_observation(i, inst) for w in self.wrappers]
        return np.concatenate(parts) if parts else np.zeros(0)

    def on_physics_advanced(self, i, inst) -> None:
        for w in self.wrappers:
            w.on_physics_advanced(i, inst)

    def reward(self, i, inst, base_reward: float) -> float:
        for w in self.wrappers:
            base_reward = w.reward(i, inst, base_reward)
        return base_reward

    def terminate(self, i, inst, base_status: str) -> str:
        for w in self.wrappers:
            base_status = w.terminate(i, inst, base_status)
        return base_status

    def on_decision(self, i, inst) -> None:
        for w in self.wrappers:
            w.on_decision(i, inst)

    def find(self, cls):
        for w in self.wrappers:
            if isinstance(w, cls):
                return w
        return None


def make_wrapper_stack(descriptors: list[str], spec,
                       config_mapping: dict | None = None) -> CompositeWrapper | None:
    if not descriptors:
        return None
    return CompositeWrapper(
        [make_wrapper(d, spec, config_mapping) for d in descriptors],
        list(descriptors))


def make_wrapper(descriptor: str, spec, config_mapping: dict | None = None):
    """Build a wrapper from its wire descriptor; run-config keys (for
    instance the terrain challenge parameters) refine the defaults."""
    from dataclasses import replace

    from .controller import ControllerWrapper
    from .imitation import ImitationWrapper, load_motion_file, procedural_motion
    from .terrain_gen import TerrainTaskWrapper, challenge_from_mapping

    kind, _, arg = descriptor.partition(":")
    if kind == "controller":
        mode = arg or "discrete"
        if mode not in ("discrete", "continuous"):
            raise ConfigError(f"controller mode must be discrete|continuous, got {arg!r}")
        return ControllerWrapper(mode=mode)
    if kind == "imitation":
        name = arg or "pendulum"
        try:
            motion = procedural_motion(name, spec)
        except ConfigError:
            motion = load_motion_file(arg)
        return ImitationWrapper(motion)
    if kind == "terrain":
        challenge = challenge_from_mapping(config_mapping or {})
        if arg:
            challenge = replace(challenge, difficulty=float(arg))
        return TerrainTaskWrapper(challenge)
    raise ConfigError(f"unknown wrapper descriptor {descriptor!r}")
