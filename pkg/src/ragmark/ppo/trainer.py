"""PPO training loop over a vectorized scene.

Collection fills the rollout buffer (buffer_size / N steps per agent),
then the clipped-surrogate update runs num_epoch epochs of shuffled
minibatches.  Total training length is exactly N x max_steps agent
decision steps.  Observation normalization statistics update during
collection only and travel inside every checkpoint.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import torch

from ..errors import ConfigError, EmptyEvaluation, NonFiniteLoss
from ..vec import VecScene
from .buffer import RolloutBuffer
from .checkpoint import PolicyParams
from .config import TrainerConfig
from .gae import STATUS_CODES, standardize

log = logging.getLogger(__name__)


@dataclass
class UpdateStats:
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float


@dataclass
class EvalReport:
    mean_return: float
    mean_length: float
    mean_forward_distance: float
    episodes: int


class MetricSink:
    """Receives metric rows and checkpoints; the harness provides the
    file-writing implementation."""

    def on_metrics(self, row: dict) -> None:
        pass

    def on_checkpoint(self, params: PolicyParams, agent_steps: int) -> None:
        pass


def ppo_update(params: PolicyParams, data: dict, config: TrainerConfig,
               optimizer: torch.optim.Optimizer,
               generator: torch.Generator) -> UpdateStats:
    """One update phase over a finalized buffer."""
    net = params.net
    obs = torch.from_numpy(data["obs"]).to(torch.float32)
    actions = torch.from_numpy(data["actions"]).to(torch.float32)
    old_logp = torch.from_numpy(data["logp"]).to(torch.float32)
    returns = torch.from_numpy(data["returns"]).to(torch.float32)
    advantages = torch.from_numpy(
        standardize(data["advantages"])).to(torch.float32)

    total = obs.shape[0]
    batch = min(config.batch_size, total)
    sums = np.zeros(4)
    batches = 0
    for _ in range(config.num_epoch):
        perm = torch.randperm(total, generator=generator)
        for start in range(0, total - batch + 1, batch):
            idx = perm[start:start + batch]
            logp, value, entropy = net.logp_value_entropy(obs[idx], actions[idx])
            ratio = torch.exp(logp - old_logp[idx])
            adv = advantages[idx]
            surr = torch.min(
                ratio * adv,
                torch.clamp(ratio, 1.0 - config.epsilon, 1.0 + config.epsilon) * adv)
            policy_loss = -surr.mean()
            value_loss = ((value - returns[idx]) ** 2).mean()
            ent = entropy.mean()
            loss = (policy_loss + config.value_loss_coef * value_loss
                    - config.beta * ent)
            if not torch.isfinite(loss):
                raise NonFiniteLoss(
                    f"policy={float(policy_loss)} value={float(value_loss)} "
                    f"entropy={float(ent)}")
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(net.parameters(), config.grad_clip_norm)
            optimizer.step()
            with torch.no_grad():
                clip_frac = ((ratio - 1.0).abs() > config.epsilon).float().mean()
            sums += [float(policy_loss.detach()), float(value_loss.detach()),
                     float(ent.detach()), float(clip_frac)]
            batches += 1
    sums /= max(batches, 1)
    return UpdateStats(*sums)


def _policy_step(params: PolicyParams, obs: np.ndarray, gen: torch.Generator,
                 update_norm: bool, deterministic: bool = False):
    if update_norm:
        params.normalizer.update(obs)
    norm = params.normalizer.normalize(obs)
    t_obs = torch.from_numpy(norm).to(torch.float32)
    actions, logp, value = params.net.act(t_obs, generator=gen,
                                          deterministic=deterministic)
    return (actions.numpy().astype(np.float64), logp.numpy(), value.numpy(),
            norm.astype(np.float32))


def _values_of(params: PolicyParams, obs: np.ndarray) -> np.ndarray:
    norm = params.normalizer.normalize(obs)
    with torch.no_grad():
        _, v = params.net(torch.from_numpy(norm).to(torch.float32))
    return v.numpy()


def train(env: VecScene, config: TrainerConfig,
          sink: MetricSink | None = None) -> PolicyParams:
    """Run PPO for exactly N x max_steps agent steps; returns final params."""
    sink = sink or MetricSink()
    n = env.n
    if config.buffer_size % n != 0:
        raise ConfigError(
            f"buffer_size {config.buffer_size} must divide by agent count {n}")
    horizon_steps = config.buffer_size // n
    torch.manual_seed(config.seed)
    gen = torch.Generator().manual_seed(config.seed)
    params = PolicyParams.fresh(env.spec.env_id, env.obs_dim, env.act_dim, config)
    params.wrappers = list(env.wrapper_descriptors)
    optimizer = torch.optim.Adam(params.net.parameters(), lr=config.learning_rate)
    buffer = RolloutBuffer(n, horizon_steps, env.obs_dim, env.act_dim,
                           config.time_horizon)

    total_target = n * config.max_steps
    transition = env.vec_reset(seed=config.seed)
    env.drain_episode_log()
    obs = transition.obs
    agent_steps = 0
    ep_returns: list[float] = []
    ep_lengths: list[float] = []
    next_summary = config.summary_freq * n
    t_last = time.perf_counter()
    steps_last = 0

    while agent_steps < total_target:
        buffer.reset()
        while not buffer.full and agent_steps < total_target:
            actions, logp, values, norm_obs = _policy_step(
                params, obs, gen, update_norm=config.normalize)
            tr = env.vec_step(actions)
            status_codes = np.array([STATUS_CODES[s] for s in tr.status])
            trunc_vals = np.zeros(n)
            truncated = [i for i, s in enumerate(tr.status) if s == "truncated"]
            if truncated:
                final = np.stack([tr.final_obs[i] for i in truncated])
                tv = _values_of(params, final)
                for k, i in enumerate(truncated):
                    trunc_vals[i] = tv[k]
            buffer.add(norm_obs, actions, logp, values, tr.rewards,
                       status_codes, trunc_vals)
            obs = tr.obs
            agent_steps += n
            for ret, length, _x, _i, _r in env.drain_episode_log():
                ep_returns.append(ret)
                ep_lengths.append(length)
            if agent_steps >= next_summary:
                now = time.perf_counter()
                sink.on_metrics({
                    "step": agent_steps,
                    "mean_return": float(np.mean(ep_returns[-50:])) if ep_returns else 0.0,
                    "mean_length": float(np.mean(ep_lengths[-50:])) if ep_lengths else 0.0,
                    "steps_per_sec": (agent_steps - steps_last)
                                     / max(now - t_last, 1e-9),
                })
                t_last = now
                steps_last = agent_steps
                next_summary += config.summary_freq * n
        if buffer.full:
            bootstrap = _values_of(params, obs)
            data = buffer.finalize(bootstrap, config.gamma, config.lam)
            ppo_update(params, data, config, optimizer, gen)
            sink.on_checkpoint(params, agent_steps)
    sink.on_checkpoint(params, agent_steps)
    return params


def evaluate(params: PolicyParams, env: VecScene, episodes: int,
             deterministic: bool = False, seed: int = 0) -> EvalReport:
    """Roll frozen-normalizer episodes; mean return, length and forward
    distance over the first `episodes` completed episodes."""
    if episodes <= 0:
        raise EmptyEvaluation("episodes must be >= 1")
    gen = torch.Generator().manual_seed(seed)
    tr = env.vec_reset(seed=seed)
    env.drain_episode_log()
    obs = tr.obs
    start_x = np.array([inst.pelvis_x() for inst in env.instances])
    returns: list[float] = []
    lengths: list[float] = []
    dists: list[float] = []
    cap = episodes * (env.spec.episode_cap + 2)
    for _ in range(cap):
        actions, _, _, _ = _policy_step(params, obs, gen, update_norm=False,
                                        deterministic=deterministic)
        tr = env.vec_step(actions)
        obs = tr.obs
        for ret, length, end_x, idx, _r in env.drain_episode_log():
            returns.append(ret)
            lengths.append(length)
            dists.append(end_x - start_x[idx])
            start_x[idx] = env.instances[idx].pelvis_x()
        if len(returns) >= episodes:
            break
    returns = returns[:episodes]
    lengths = lengths[:episodes]
    dists = dists[:episodes]
    return EvalReport(
        mean_return=float(np.mean(returns)),
        mean_length=float(np.mean(lengths)),
        mean_forward_distance=float(np.mean(dists)),
        episodes=len(returns),
    )
