"""Procedural terrain challenges and the parameter-space adversary.

Heightfields cover x in [0, 50] m at 0.1 m spacing with a flat spawn
apron; difficulty scales bump height, slope and gap width together.
The adversary is a bounded hill-climber over the generator parameters:
a Gaussian proposal is accepted iff the measured mean agent reward
drops, which maximizes the inverse of the reward signal while the
difficulty cap keeps the task learnable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InvalidValue
from ..physics.terrain import Terrain, query_height
from .base import TaskWrapper

FIELD_LENGTH = 50.0
FIELD_SPACING = 0.1
SPAWN_APRON = 2.0       # metres kept flat around the spawn point
GAP_DEPTH = -1.0
DIFFICULTY_CAP = 0.8
PROPOSAL_SIGMA = 0.05   # fraction of each bound range


@dataclass(frozen=True)
class TerrainChallenge:
    bump_height: float = 0.15
    bump_spacing: float = 3.0
    slope: float = 0.05
    gap_width: float = 0.4
    difficulty: float = 0.5
    height_obs_count: int = 10
    height_obs_spacing: float = 0.2
    bounds: dict = field(default_factory=lambda: {
        "bump_height": (0.0, 0.3),
        "bump_spacing": (1.5, 6.0),
        "slope": (0.0, 0.15),
        "gap_width": (0.0, 0.8),
    })
    difficulty_cap: float = DIFFICULTY_CAP

    def __post_init__(self) -> None:
        if not (0.0 <= self.difficulty <= 1.0):
            raise InvalidValue("difficulty must be in [0, 1]")
        for key, (lo, hi) in self.bounds.items():
            v = getattr(self, key)
            if not (lo <= v <= hi):
                raise InvalidValue(f"{key}={v} outside bounds [{lo}, {hi}]")
        if self.height_obs_count < 0:
            raise InvalidValue("height_obs_count must be >= 0")


def generate_terrain(challenge: TerrainChallenge, rng: np.random.Generator) -> Terrain:
    """Heightfield from the challenge parameters; difficulty 0 is flat."""
    n = int(FIELD_LENGTH / FIELD_SPACING) + 1
    xs = np.arange(n) * FIELD_SPACING
    h = np.zeros(n)
    d = challenge.difficulty
    if d > 0.0:
        h += d * challenge.slope * xs
        # bumps at (jittered) regular intervals
        x = SPAWN_APRON + challenge.bump_spacing * (0.5 + rng.random())
        while x < FIELD_LENGTH - 1.0:
            width = 0.4 + 0.4 * rng.random()
            height = d * challenge.bump_height * (0.5 + 0.5 * rng.random())
            mask = np.abs(xs - x) < width / 2
            h[mask] += height * (1 + np.cos(2 * np.pi * (xs[mask] - x) / width)) / 2
            x += challenge.bump_spacing * (0.75 + 0.5 * rng.random())
        # gaps: sheer drops the agent must cross
        gap_w = d * challenge.gap_width
        if gap_w >= 2 * FIELD_SPACING:
            x = SPAWN_APRON + 4.0 + 4.0 * rng.random()
            while x < FIELD_LENGTH - 2.0:
                mask = (xs >= x) & (xs <= x + gap_w)
                h[mask] = GAP_DEPTH
                x += 5.0 + 3.0 * rng.random()
    h[xs <= SPAWN_APRON] = 0.0
    return Terrain(kind="heightfield", heights=h, spacing=FIELD_SPACING, x0=0.0)


def height_observation(terrain: Terrain, pelvis_x: float, k: int,
                       spacing: float) -> np.ndarray:
    """Relative ground heights ahead: y(x + i*spacing) - y(x), i = 1..k."""
    if k < 0:
        raise InvalidValue("height observation count must be >= 0")
    base = query_height(terrain, pelvis_x)
    return np.array([query_height(terrain, pelvis_x + i * spacing) - base
                     for i in range(1, k + 1)])


def adversarial_update(challenge: TerrainChallenge, mean_agent_reward: float,
                       rng: np.random.Generator,
                       incumbent_reward: float | None = None
                       ) -> tuple[TerrainChallenge, bool]:
    """One accept/reject step of the terrain adversary.

    ``mean_agent_reward`` is the measured reward on the PROPOSED
    challenge (the caller evaluates proposals); the proposal is accepted
    iff it is lower than ``incumbent_reward``.  Returns (challenge,
    accepted).
    """
    if incumbent_reward is None or mean_agent_reward < incumbent_reward:
        return challenge, True
    return challenge, False


def propose_challenge(challenge: TerrainChallenge,
                      rng: np.random.Generator) -> TerrainChallenge:
    """Gaussian perturbation of each parameter, clipped to bounds and to
    the difficulty cap."""
    updates = {}
    for key, (lo, hi) in challenge.bounds.items():
        sigma = PROPOSAL_SIGMA * (hi - lo)
        updates[key] = float(np.clip(getattr(challenge, key) + rng.normal(0, sigma),
                                     lo, hi))
    d = challenge.difficulty + rng.normal(0, PROPOSAL_SIGMA)
    updates["difficulty"] = float(np.clip(d, 0.0, challenge.difficulty_cap))
    return replace(challenge, **updates)


class TerrainAdversary:
    """Bookkeeping for the propose/evaluate/accept loop."""

    def __init__(self, challenge: TerrainChallenge, seed: int = 0):
        self.current = challenge
        self.current_reward: float | None = None
        self.rng = np.random.default_rng(seed)
        self.proposals = 0
        self.accepted = 0

    def propose(self) -> TerrainChallenge:
        return propose_challenge(self.current, self.rng)

    def observe(self, proposal: TerrainChallenge, measured_reward: float) -> bool:
        self.proposals += 1
        _, ok = adversarial_update(proposal, measured_reward, self.rng,
                                   self.current_reward)
        if ok:
            self.current = proposal
            self.current_reward = measured_reward
            self.accepted += 1
        return ok

    @property
    def accept_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0


def challenge_from_mapping(mapping: dict) -> TerrainChallenge:
    """Build a challenge from run-config keys.

    Recognized keys: difficulty, difficulty_cap, height_obs_count,
    height_obs_spacing, bump_spacing, and per-parameter maxima
    (bump_height_max, gap_width_max, slope_max) which set both the bound
    and the nominal value.
    """
    base = TerrainChallenge()
    bounds = dict(base.bounds)
    updates: dict = {}
    for key in ("difficulty", "difficulty_cap", "height_obs_spacing", "bump_spacing"):
        if key in mapping:
            updates[key] = float(mapping[key])
    if "height_obs_count" in mapping:
        updates["height_obs_count"] = int(mapping["height_obs_count"])
    for param in ("bump_height", "gap_width", "slope"):
        key = f"{param}_max"
        if key in mapping:
            hi = float(mapping[key])
            bounds[param] = (bounds[param][0], hi)
            updates[param] = hi
    if "bump_spacing" in updates:
        lo, hi = bounds["bump_spacing"]
        updates["bump_spacing"] = float(np.clip(updates["bump_spacing"], lo, hi))
    return replace(base, bounds=bounds, **updates)


TERRAIN_CONFIG_KEYS = frozenset({
    "difficulty", "difficulty_cap", "height_obs_count", "height_obs_spacing",
    "bump_spacing", "bump_height_max", "gap_width_max", "slope_max",
})


class TerrainTaskWrapper(TaskWrapper):
    """Regenerates per-instance terrain each episode and appends the
    look-ahead height observations."""

    def __init__(self, challenge: TerrainChallenge):
        self.challenge = challenge

    def obs_extension_dim(self) -> int:
        return self.challenge.height_obs_count

    def pre_reset(self, i: int, inst) -> None:
        terrain = generate_terrain(self.challenge, inst.rng)
        inst.batch.set_terrain(i, terrain)

    def extend_observation(self, i: int, inst) -> np.ndarray:
        return height_observation(
            inst.batch.terrains[i], inst.pelvis_x(),
            self.challenge.height_obs_count, self.challenge.height_obs_spacing)
