"""Rollout storage and advantage finalization.

The buffer holds buffer_size transitions as (T, N, ...) arrays with
T = buffer_size / N per-agent steps.  At finalize, each agent's stream
runs through GAE with the lambda-chain broken at episode ends and at
every ``time_horizon`` steps within an episode (segments bootstrap from
the next value estimate, mirroring trajectory pushes at the horizon).
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidValue
from .gae import RUNNING, TRUNCATED, compute_gae


class RolloutBuffer:
    def __init__(self, n_agents: int, horizon_steps: int, obs_dim: int, act_dim: int,
                 time_horizon: int):
        self.n = n_agents
        self.T = horizon_steps
        self.time_horizon = time_horizon
        self.obs = np.zeros((self.T, self.n, obs_dim), dtype=np.float32)
        self.actions = np.zeros((self.T, self.n, act_dim), dtype=np.float32)
        self.logp = np.zeros((self.T, self.n), dtype=np.float64)
        self.values = np.zeros((self.T, self.n), dtype=np.float64)
        self.rewards = np.zeros((self.T, self.n), dtype=np.float64)
        self.status = np.zeros((self.T, self.n), dtype=np.int64)
        self.trunc_values = np.zeros((self.T, self.n), dtype=np.float64)
        self.t = 0

    @property
    def full(self) -> bool:
        return self.t >= self.T

    def add(self, obs, actions, logp, values, rewards, status, trunc_values) -> None:
        if self.full:
            raise InvalidValue("buffer already full")
        k = self.t
        self.obs[k] = obs
        self.actions[k] = actions
        self.logp[k] = logp
        self.values[k] = values
        self.rewards[k] = rewards
        self.status[k] = status
        self.trunc_values[k] = trunc_values
        self.t += 1

    def reset(self) -> None:
        self.t = 0

    def finalize(self, bootstrap_values: np.ndarray, gamma: float, lam: float):
        """Per-agent GAE over the stored streams; returns flat arrays."""
        if not self.full:
            raise InvalidValue("finalize needs a full buffer")
        adv = np.zeros((self.T, self.n))
        ret = np.zeros((self.T, self.n))
        for a in range(self.n):
            status = self.status[:, a].copy()
            trunc_v = self.trunc_values[:, a].copy()
            self._apply_horizon_breaks(status, trunc_v, self.values[:, a],
                                       float(bootstrap_values[a]))
            adv[:, a], ret[:, a] = compute_gae(
                self.rewards[:, a], self.values[:, a], status, gamma, lam,
                float(bootstrap_values[a]), truncated_values=trunc_v)
        flat = self.T * self.n
        return {
            "obs": self.obs.reshape(flat, -1),
            "actions": self.actions.reshape(flat, -1),
            "logp": self.logp.reshape(flat),
            "values": self.values.reshape(flat),
            "advantages": adv.reshape(flat),
            "returns": ret.reshape(flat),
        }

    def _apply_horizon_breaks(self, status, trunc_v, values, bootstrap: float) -> None:
        """Convert every time_horizon-th step of an episode into a soft
        truncation bootstrapping the next value estimate."""
        steps_in_episode = 0
        for t in range(self.T):
            if status[t] != RUNNING:
                steps_in_episode = 0
                continue
            steps_in_episode += 1
            if steps_in_episode >= self.time_horizon:
                status[t] = TRUNCATED
                trunc_v[t] = values[t + 1] if t + 1 < self.T else bootstrap
                steps_in_episode = 0
