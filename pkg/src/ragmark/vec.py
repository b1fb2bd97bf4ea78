"""Vectorized multi-agent scene: N instances stepped as one batch.

One `vec_step` holds each instance's action fixed for
``decision_frequency`` physics substeps (all executed inside a single
kernel call), then computes reward/termination/observation at the
decision boundary.  Finished instances auto-reset inside the same call;
``reset_flags`` marks them and ``final_obs`` carries their pre-reset
observation for bootstrapping.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .envs.instance import (EnvInstance, STATUS_RUNNING, STATUS_TERMINATED,
                            STATUS_TRUNCATED, observe_batch)
from .envs.spec import EnvSpec
from .errors import InvalidValue, NonFiniteAction, NonFiniteObservation, ShapeMismatch
from .physics.scene import SceneBatch, motor_torques


@dataclass
class BatchTransition:
    obs: np.ndarray                      # (N, obs_dim)
    rewards: np.ndarray                  # (N,)
    status: list[str]                    # running | terminated | truncated
    reset_flags: np.ndarray              # (N,) bool; True where obs is post-reset
    # pre-reset observations of auto-reset instances, for value bootstrapping
    final_obs: dict[int, np.ndarray] = field(default_factory=dict)


@dataclass
class VecTotals:
    steps: int = 0          # agent decision steps, summed over instances
    episodes: int = 0
    wall_clock: float = 0.0


class VecScene:
    def __init__(self, spec: EnvSpec, n: int = 16, decision_frequency: int = 5,
                 seed: int = 0, wrapper=None):
        if n < 1:
            raise InvalidValue("need at least one instance")
        if decision_frequency < 1:
            raise InvalidValue("decision_frequency must be >= 1")
        self.spec = spec
        self.n = n
        self.decision_frequency = decision_frequency
        if isinstance(wrapper, (list, tuple)):
            from .tasks.base import make_wrapper_stack
            wrapper = make_wrapper_stack(list(wrapper), spec)
        self.wrapper = wrapper
        self.wrapper_descriptors: list[str] = getattr(wrapper, "descriptors", [])
        self.batch = SceneBatch(spec.cm, spec.physics, n)
        self.totals = VecTotals()
        self._seed = seed
        self._episode_log: list[tuple[float, int, float, int, str]] = []
        self._rngs = self._spawn_rngs(seed)
        self.instances = [EnvInstance(spec, self.batch, i, self._rngs[i])
                          for i in range(n)]
        if wrapper is not None:
            wrapper.bind(self)
        self._obs_dim = spec.obs_dim + (wrapper.obs_extension_dim() if wrapper else 0)

    def _spawn_rngs(self, seed: int) -> list[np.random.Generator]:
        return [np.random.default_rng(s)
                for s in np.random.SeedSequence(seed).spawn(self.n)]

    @property
    def obs_dim(self) -> int:
        return self._obs_dim

    @property
    def act_dim(self) -> int:
        return self.spec.act_dim

    @property
    def decision_dt(self) -> float:
        return self.spec.physics.dt * self.decision_frequency

    # -- operations --------------------------------------------------------

    def vec_reset(self, seed: int | None = None) -> BatchTransition:
        if seed is not None:
            self._seed = seed
            self._rngs = self._spawn_rngs(seed)
            for i, inst in enumerate(self.instances):
                inst.rng = self._rngs[i]
        for i, inst in enumerate(self.instances):
            self._reset_instance(i)
        obs = self._observe_all()
        return BatchTransition(
            obs=obs, rewards=np.zeros(self.n),
            status=[STATUS_RUNNING] * self.n,
            reset_flags=np.ones(self.n, dtype=bool),
        )

    def _reset_instance(self, i: int) -> None:
        inst = self.instances[i]
        if self.wrapper is not None:
            self.wrapper.pre_reset(i, inst)
        inst.agent_reset()
        if self.wrapper is not None:
            self.wrapper.post_reset(i, inst)

    def _observe_all(self) -> np.ndarray:
        clocks = np.array([inst.phase_clock for inst in self.instances])
        obs = observe_batch(self.spec, self.batch, clocks)
        if self.wrapper is not None:
            ext = np.stack([self.wrapper.extend_observation(i, self.instances[i])
                            for i in range(self.n)])
            obs = np.concatenate([obs, ext], axis=1) if ext.shape[1] else obs
        if not np.all(np.isfinite(obs)):
            raise NonFiniteObservation("batch observation contains non-finite values")
        return obs

    def vec_step(self, actions: np.ndarray) -> BatchTransition:
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape != (self.n, self.spec.act_dim):
            raise ShapeMismatch(
                f"actions shape {actions.shape} != {(self.n, self.spec.act_dim)}")
        if not np.all(np.isfinite(actions)):
            raise NonFiniteAction("actions contain non-finite values")

        torques = motor_torques(self.spec.cm, actions)
        ok = self.batch.step(torques, self.decision_frequency)

        dt_decision = self.decision_dt
        for i, inst in enumerate(self.instances):
            inst.last_action = actions[i].copy()
            inst.decision_step += 1
            inst.phase_clock += dt_decision
        if self.wrapper is not None:
            for i, inst in enumerate(self.instances):
                self.wrapper.on_physics_advanced(i, inst)
        self.totals.steps += self.n

        rewards = np.zeros(self.n)
        status: list[str] = [STATUS_RUNNING] * self.n
        for i, inst in enumerate(self.instances):
            if not ok[i]:
                # diverged physics is surfaced as a termination, never a crash
                rewards[i] = 0.0
                status[i] = STATUS_TERMINATED
                inst.last_termination = "non_finite"
                continue
            base = inst.step_reward()
            if self.wrapper is not None:
                base = self.wrapper.reward(i, inst, base)
            rewards[i] = base
            st = inst.terminate_check()
            if self.wrapper is not None:
                st = self.wrapper.terminate(i, inst, st)
            status[i] = st
        for i, inst in enumerate(self.instances):
            inst.episode_return += rewards[i]

        reset_flags = np.zeros(self.n, dtype=bool)
        done = [i for i in range(self.n) if status[i] != STATUS_RUNNING]
        final_obs: dict[int, np.ndarray] = {}
        if done:
            pre = self._observe_all()
            for i in done:
                final_obs[i] = pre[i].copy()
                inst = self.instances[i]
                self._episode_log.append(
                    (inst.episode_return, inst.decision_step, inst.pelvis_x(), i,
                     inst.last_termination or "unknown"))
                self.totals.episodes += 1
                self._reset_instance(i)
                reset_flags[i] = True
        if self.wrapper is not None:
            for i in range(self.n):
                if i not in final_obs:
                    self.wrapper.on_decision(i, self.instances[i])
        obs = self._observe_all()
        return BatchTransition(obs=obs, rewards=rewards, status=status,
                               reset_flags=reset_flags, final_obs=final_obs)

    def drain_episode_log(self) -> list[tuple[float, int, float, int, str]]:
        """Completed-episode records (return, length, final pelvis x,
        instance, termination reason) since the last drain."""
        out = self._episode_log
        self._episode_log = []
        return out


@dataclass
class BenchReport:
    env_id: str
    agents: int
    decision_frequency: int
    dt: float
    duration_s: float
    vec_steps: int
    total_agent_steps: int
    agent_steps_per_second: float
    episodes: int
    host: str

    def to_text(self) -> str:
        lines = [f"{k}: {v}" for k, v in vars(self).items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BenchReport":
        kv: dict[str, str] = {}
        for line in text.strip().splitlines():
            k, _, v = line.partition(":")
            kv[k.strip()] = v.strip()
        return cls(
            env_id=kv["env_id"], agents=int(kv["agents"]),
            decision_frequency=int(kv["decision_frequency"]), dt=float(kv["dt"]),
            duration_s=float(kv["duration_s"]), vec_steps=int(kv["vec_steps"]),
            total_agent_steps=int(kv["total_agent_steps"]),
            agent_steps_per_second=float(kv["agent_steps_per_second"]),
            episodes=int(kv["episodes"]), host=kv["host"],
        )


def bench_throughput(scene: VecScene, duration: float,
                     action_source: str = "zeros", seed: int = 0) -> BenchReport:
    """Step the scene for ~duration wall-clock seconds and report rates."""
    import platform

    if duration <= 0:
        raise InvalidValue("duration must be > 0")
    if action_source not in ("zeros", "random"):
        raise InvalidValue(f"unknown action source {action_source!r}")
    rng = np.random.default_rng(seed)
    scene.vec_reset(seed=seed)
    episodes0 = scene.totals.episodes

    def actions() -> np.ndarray:
        if action_source == "zeros":
            return np.zeros((scene.n, scene.act_dim))
        return rng.uniform(-1.0, 1.0, (scene.n, scene.act_dim))

    scene.vec_step(actions())  # ensure kernels are hot before timing
    steps = 0
    t0 = time.perf_counter()
    while True:
        scene.vec_step(actions())
        steps += 1
        elapsed = time.perf_counter() - t0
        if elapsed >= duration:
            break
    scene.totals.wall_clock += elapsed
    return BenchReport(
        env_id=scene.spec.env_id, agents=scene.n,
        decision_frequency=scene.decision_frequency, dt=scene.spec.physics.dt,
        duration_s=elapsed, vec_steps=steps,
        total_agent_steps=steps * scene.n,
        agent_steps_per_second=steps * scene.n / elapsed,
        episodes=scene.totals.episodes - episodes0,
        host=f"{platform.node()} {platform.machine()} cpus={_cpu_count()}",
    )


def _cpu_count() -> int:
    import os
    return os.cpu_count() or 1
