"""Per-instance environment logic: resets, observations, rewards,
termination.

Observation assembly is batched over all instances of a scene in one
numpy pass (`observe_batch`); the single-instance helpers below slice
into that path so there is one source of truth for the layout.
"""

from __future__ import annotations

import numpy as np

from ..errors import MissingLabel, NonFiniteObservation
from ..physics.scene import SceneBatch, SpawnPose, default_spawn
from ..physics.terrain import query_height
from .spec import EnvSpec

STATUS_RUNNING = "running"
STATUS_TERMINATED = "terminated"
STATUS_TRUNCATED = "truncated"


class EnvInstance:
    """One agent instance; owns a slice of a shared SceneBatch."""

    def __init__(self, spec: EnvSpec, batch: SceneBatch, index: int,
                 rng: np.random.Generator):
        self.spec = spec
        self.batch = batch
        self.index = index
        self.rng = rng
        self.last_action = np.zeros(spec.act_dim)
        self.decision_step = 0
        self.phase_clock = 0.0
        self.episode_return = 0.0
        self.last_termination: str | None = None

    # -- spec operations ------------------------------------------------

    def agent_reset(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """Re-spawn with small symmetry-breaking noise; returns the
        initial observation."""
        rng = rng or self.rng
        spec = self.spec
        cm = spec.cm
        spawn = default_spawn(cm)
        noise = spec.reset_noise
        jp = spawn.joint_pos + rng.uniform(-noise, noise, cm.n_joints)
        spawn.joint_pos = np.clip(jp, cm.jnt_range[:, 0], cm.jnt_range[:, 1])
        spawn.joint_vel = rng.uniform(-noise, noise, cm.n_joints)
        self.respawn(spawn)
        return self.build_observation()

    def respawn(self, spawn: SpawnPose) -> None:
        self.batch.spawn_instance(self.index, spawn)
        self.last_action[:] = 0.0
        self.decision_step = 0
        self.phase_clock = 0.0
        self.episode_return = 0.0
        self.last_termination = None

    def build_observation(self) -> np.ndarray:
        obs = observe_batch(self.spec, self.batch,
                            np.array([self.phase_clock]),
                            indices=np.array([self.index]))[0]
        if not np.all(np.isfinite(obs)):
            raise NonFiniteObservation(f"instance {self.index}")
        return obs

    def step_reward(self) -> float:
        return float(sum(self.reward_terms().values()))

    def reward_terms(self) -> dict[str, float]:
        """Individual reward components; wrappers recombine these."""
        spec = self.spec
        w = spec.reward_weights
        terms: dict[str, float] = {}
        if "velocity" in spec.reward_terms:
            terms["velocity"] = w.w_velocity * self.pelvis_velocity_x()
        if "upright" in spec.reward_terms:
            terms["upright"] = w.w_upright * uprightness(self, "pelvis")
        if "effort" in spec.reward_terms:
            terms["effort"] = -w.w_effort * get_effort(self.last_action)
        if "height" in spec.reward_terms:
            below = self.pelvis_height() < w.height_threshold
            terms["height"] = -w.low_height_penalty if below else 0.0
        if "joint_limit" in spec.reward_terms:
            terms["joint_limit"] = -w.w_joint_limit * joints_at_limit_count(self)
        if "phase" in spec.reward_terms:
            terms["phase"] = w.w_phase * phase_bonus(self)
        return terms

    def terminate_check(self) -> str:
        """'running', 'terminated' or 'truncated'; reason recorded on
        the instance."""
        spec = self.spec
        tp = spec.termination_params
        if tp.non_foot_contact_terminates:
            hit = on_terrain_collision_flags(self)
            if hit is not None:
                self.last_termination = f"non_foot_contact:{spec.model.bodies[hit].name}"
                return STATUS_TERMINATED
        if tp.min_height is not None and self.pelvis_height() < tp.min_height:
            self.last_termination = "low_height"
            return STATUS_TERMINATED
        if tp.max_head_tilt is not None and tilt(self, "head") > tp.max_head_tilt:
            self.last_termination = "head_tilt"
            return STATUS_TERMINATED
        if tp.max_body_tilt is not None and tilt(self, "torso") > tp.max_body_tilt:
            self.last_termination = "body_tilt"
            return STATUS_TERMINATED
        if self.decision_step >= spec.episode_cap:
            self.last_termination = "episode_cap"
            return STATUS_TRUNCATED
        return STATUS_RUNNING

    # -- state accessors --------------------------------------------------

    def pelvis_height(self) -> float:
        i, p = self.index, self.spec.cm.pelvis_index
        x = float(self.batch.pos[i, p, 0])
        y = float(self.batch.pos[i, p, 1])
        return y - query_height(self.batch.terrains[i], x)

    def pelvis_velocity_x(self) -> float:
        return float(self.batch.linvel[self.index, self.spec.cm.pelvis_index, 0])

    def pelvis_x(self) -> float:
        return float(self.batch.pos[self.index, self.spec.cm.pelvis_index, 0])


# --- helper operations (callback toolbox) -------------------------------------

def get_effort(actions: np.ndarray, ignore: set[int] | None = None) -> float:
    """Sum of squared actions, each clamped into [-1, 1] first."""
    a = np.clip(np.asarray(actions, dtype=np.float64), -1.0, 1.0)
    if ignore:
        keep = [i for i in range(len(a)) if i not in ignore]
        a = a[keep]
    return float(np.sum(a * a))


def _single_label_index(inst: EnvInstance, label: str) -> int:
    hits = inst.spec.model.labeled(label)
    if len(hits) != 1:
        raise MissingLabel(label)
    return hits[0]


def uprightness(inst: EnvInstance, body_label: str) -> float:
    """Dot of the labeled body's local +y axis (world) with world up."""
    b = _single_label_index(inst, body_label)
    q = inst.batch.quat[inst.index, b]
    # second column of the rotation matrix, y component
    return float(1.0 - 2.0 * (q[1] * q[1] + q[3] * q[3]))


def tilt(inst: EnvInstance, body_label: str) -> float:
    return 1.0 - uprightness(inst, body_label)


def joints_at_limit_count(inst: EnvInstance) -> int:
    """Joints within 1% of range width of either bound."""
    cm = inst.spec.cm
    q = inst.batch.jpos[inst.index]
    lo, hi = cm.jnt_range[:, 0], cm.jnt_range[:, 1]
    band = 0.01 * (hi - lo)
    return int(np.sum((q <= lo + band) | (q >= hi - band)))


def phase_bonus(inst: EnvInstance) -> float:
    """Rewards alternating foot lead synchronized with the phase clock."""
    spec = inst.spec
    T = spec.phase_period
    phi = (inst.phase_clock % T) / T
    lf = _single_label_index(inst, "left_foot")
    rf = _single_label_index(inst, "right_foot")
    dx = float(inst.batch.pos[inst.index, lf, 0] - inst.batch.pos[inst.index, rf, 0])
    return float(np.sin(2.0 * np.pi * phi) * np.sign(dx))


def on_terrain_collision_flags(inst: EnvInstance) -> int | None:
    """First non-foot body that touched terrain during the last decision
    step, or None when only feet touched."""
    cm = inst.spec.cm
    touched = inst.batch.touch_accum[inst.index]
    bad = touched & (1 - cm.foot_flag)
    if bad.any():
        return int(np.argmax(bad))
    return None


def on_terrain_collision(contacts, model) -> tuple[str, int | None]:
    """ContactSet form: ('foot_only', None) or ('non_foot', body index)."""
    for c in contacts:
        if "foot" not in model.bodies[c.body].labels:
            return ("non_foot", c.body)
    return ("foot_only", None)


# --- batched observation -------------------------------------------------------

def observe_batch(spec: EnvSpec, batch: SceneBatch, phase_clocks: np.ndarray,
                  indices: np.ndarray | None = None) -> np.ndarray:
    """Observations for the given instances as an (n, obs_dim) array.

    Layout per docs/envs sheet: pelvis height above terrain, pelvis up
    vector, pelvis linear velocity, pelvis angular velocity, normalized
    joint positions, scaled joint velocities, per-body relative
    pose/velocity blocks, foot contact flags, then sin/cos phase for
    phase-rewarded environments.
    """
    cm = spec.cm
    if indices is None:
        idx = slice(None)
        n = batch.n
    else:
        idx = indices
        n = len(indices)
    p = cm.pelvis_index
    pos = batch.pos[idx]
    quat = batch.quat[idx]
    linvel = batch.linvel[idx]
    angvel = batch.angvel[idx]
    jpos = batch.jpos[idx]
    jvel = batch.jvel[idx]

    px = pos[:, p, 0]
    py = pos[:, p, 1]
    ground = _terrain_heights_at(batch, px, indices)
    height = (py - ground)[:, None]

    q = quat[:, p, :]
    up_full = np.stack([
        2.0 * (q[:, 1] * q[:, 2] - q[:, 0] * q[:, 3]),
        1.0 - 2.0 * (q[:, 1] ** 2 + q[:, 3] ** 2),
        2.0 * (q[:, 2] * q[:, 3] + q[:, 0] * q[:, 1]),
    ], axis=1)
    if spec.planar:
        up = up_full[:, :2]
        lv = linvel[:, p, :2]
        av = angvel[:, p, 2:3]
    else:
        up = up_full
        lv = linvel[:, p, :]
        av = angvel[:, p, :]

    lo, hi = cm.jnt_range[:, 0], cm.jnt_range[:, 1]
    mid = 0.5 * (lo + hi)
    jp = 2.0 * (jpos - mid) / (hi - lo)
    jv = 0.1 * jvel

    ob = cm.observed_bodies
    rel_pos = pos[:, ob, :] - pos[:, p, :][:, None, :]
    rel_vel = linvel[:, ob, :] - linvel[:, p, :][:, None, :]
    if spec.planar:
        body_block = np.concatenate(
            [rel_pos[:, :, :2], rel_vel[:, :, :2]], axis=2).reshape(n, -1)
    else:
        body_block = np.concatenate([rel_pos, rel_vel], axis=2).reshape(n, -1)

    feet = batch.touch_final[idx][:, cm.foot_bodies].astype(np.float64)

    parts = [height, up, lv, av, jp, jv, body_block, feet]
    if "phase" in spec.reward_terms:
        phi = (phase_clocks % spec.phase_period) / spec.phase_period
        parts.append(np.stack([np.sin(2 * np.pi * phi), np.cos(2 * np.pi * phi)], axis=1))
    return np.concatenate(parts, axis=1)


def _terrain_heights_at(batch: SceneBatch, x: np.ndarray,
                        indices: np.ndarray | None) -> np.ndarray:
    kinds = batch.terr_kind if indices is None else batch.terr_kind[indices]
    heights = batch.terr_heights if indices is None else batch.terr_heights[indices]
    out = np.zeros_like(x)
    hf = kinds == 1
    if hf.any():
        t = (x[hf] - batch.terr_x0) / batch.terr_spacing
        m = heights.shape[1]
        t = np.clip(t, 0.0, m - 1.0)
        i0 = np.minimum(t.astype(np.int64), m - 2)
        frac = t - i0
        rows = heights[hf]
        out[hf] = rows[np.arange(rows.shape[0]), i0] * (1 - frac) + \
            rows[np.arange(rows.shape[0]), i0 + 1] * frac
    return out
