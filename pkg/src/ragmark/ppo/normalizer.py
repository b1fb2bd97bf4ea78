"""Running observation normalization (Welford/Chan parallel update)."""

from __future__ import annotations

import numpy as np

CLIP = 5.0
EPS = 1e-8


class RunningNormalizer:
    def __init__(self, dim: int):
        self.dim = dim
        self.count = 0.0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    @property
    def var(self) -> np.ndarray:
        if self.count < 1:
            return np.zeros(self.dim)
        return self.m2 / self.count

    def update(self, batch: np.ndarray) -> None:
        """Merge a batch of rows into the running statistics."""
        batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
        n = batch.shape[0]
        if n == 0:
            return
        b_mean = batch.mean(axis=0)
        b_m2 = ((batch - b_mean) ** 2).sum(axis=0)
        if self.count == 0:
            self.count = float(n)
            self.mean = b_mean
            self.m2 = b_m2
            return
        delta = b_mean - self.mean
        total = self.count + n
        self.mean = self.mean + delta * (n / total)
        self.m2 = self.m2 + b_m2 + delta * delta * (self.count * n / total)
        self.count = total

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        z = (obs - self.mean) / np.sqrt(self.var + EPS)
        return np.clip(z, -CLIP, CLIP)

    def state(self) -> dict[str, np.ndarray]:
        return {
            "normalizer_count": np.array([self.count]),
            "normalizer_mean": self.mean.copy(),
            "normalizer_m2": self.m2.copy(),
        }

    @classmethod
    def from_state(cls, state: dict[str, np.ndarray]) -> "RunningNormalizer":
        mean = np.asarray(state["normalizer_mean"], dtype=np.float64)
        norm = cls(len(mean))
        norm.count = float(np.asarray(state["normalizer_count"]).reshape(-1)[0])
        norm.mean = mean.copy()
        norm.m2 = np.asarray(state["normalizer_m2"], dtype=np.float64).copy()
        return norm


class IdentityNormalizer(RunningNormalizer):
    """Used when normalize: false; keeps the same interface and
    checkpoint layout."""

    def update(self, batch: np.ndarray) -> None:
        pass

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        return np.asarray(obs, dtype=np.float64)
