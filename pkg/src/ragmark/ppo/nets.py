"""Gaussian policy network with a shared trunk and separate value head."""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn as nn


class PolicyValueNet(nn.Module):
    def __init__(self, obs_dim: int, act_dim: int, num_layers: int = 2,
                 hidden_units: int = 128, log_std_init: float = -0.5):
        super().__init__()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        layers: list[nn.Module] = []
        width = obs_dim
        for _ in range(num_layers):
            layers += [nn.Linear(width, hidden_units), nn.Tanh()]
            width = hidden_units
        self.trunk = nn.Sequential(*layers)
        self.mean_head = nn.Linear(width, act_dim)
        self.value_head = nn.Linear(width, 1)
        self.log_std = nn.Parameter(torch.full((act_dim,), log_std_init))
        self._init_weights()

    def _init_weights(self) -> None:
        for m in self.trunk:
            if isinstance(m, nn.Linear):
                nn.init.orthogonal_(m.weight, gain=math.sqrt(2.0))
                nn.init.zeros_(m.bias)
        nn.init.orthogonal_(self.mean_head.weight, gain=0.01)
        nn.init.zeros_(self.mean_head.bias)
        nn.init.orthogonal_(self.value_head.weight, gain=1.0)
        nn.init.zeros_(self.value_head.bias)

    def forward(self, obs: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.trunk(obs)
        return self.mean_head(h), self.value_head(h).squeeze(-1)

    def distribution(self, obs: torch.Tensor) -> torch.distributions.Normal:
        mean, _ = self(obs)
        return torch.distributions.Normal(mean, self.log_std.exp())

    def logp_value_entropy(self, obs: torch.Tensor, actions: torch.Tensor):
        mean, value = self(obs)
        dist = torch.distributions.Normal(mean, self.log_std.exp())
        logp = dist.log_prob(actions).sum(-1)
        entropy = dist.entropy().sum(-1)
        return logp, value, entropy

    @torch.no_grad()
    def act(self, obs: torch.Tensor, generator: torch.Generator | None = None,
            deterministic: bool = False):
        mean, value = self(obs)
        if deterministic:
            actions = mean
            std = self.log_std.exp()
            logp = _normal_logp(actions, mean, std)
            return actions, logp, value
        std = self.log_std.exp()
        noise = torch.randn(mean.shape, generator=generator, dtype=mean.dtype)
        actions = mean + std * noise
        logp = _normal_logp(actions, mean, std)
        return actions, logp, value

    def gaussian_entropy(self) -> float:
        """Closed form: sum(log_std + 0.5 log(2 pi e))."""
        with torch.no_grad():
            return float((self.log_std + 0.5 * math.log(2 * math.pi * math.e)).sum())


def _normal_logp(x: torch.Tensor, mean: torch.Tensor, std: torch.Tensor) -> torch.Tensor:
    var = std * std
    return (-((x - mean) ** 2) / (2 * var) - std.log()
            - 0.5 * math.log(2 * math.pi)).sum(-1)


def flat_param_count(net: nn.Module) -> int:
    return sum(p.numel() for p in net.parameters())


def state_dict_arrays(net: nn.Module) -> dict[str, np.ndarray]:
    """Weights as float32 numpy arrays in state_dict order."""
    return {k: v.detach().cpu().numpy().astype("<f4")
            for k, v in net.state_dict().items()}


def load_state_arrays(net: nn.Module, arrays: dict[str, np.ndarray]) -> None:
    sd = {k: torch.from_numpy(np.ascontiguousarray(v)).to(torch.float32)
          for k, v in arrays.items()}
    net.load_state_dict(sd)
