"""Scene state management on top of the batch kernel.

A :class:`SceneBatch` owns the flat state arrays for N independent
instances of one model and steps them through the numba kernel in a
single call.  :class:`SceneState` is the single-instance view used by
the operation-level API (``init_scene`` / ``step_physics``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidValue, NonFiniteState, RangeViolation, SpawnPenetration
from .compiled import CompiledModel, _quat_mul, _quat_rotate, compile_model
from .config import PhysicsConfig
from .kernels import step_batch
from .terrain import Terrain, query_height


@dataclass(frozen=True)
class RigidState:
    pos: np.ndarray
    quat: np.ndarray
    lin_vel: np.ndarray
    ang_vel: np.ndarray


@dataclass(frozen=True)
class ContactPoint:
    body: int
    geom: int
    point: np.ndarray
    normal: np.ndarray
    depth: float


ContactSet = tuple[ContactPoint, ...]


@dataclass
class SpawnPose:
    root_pos: np.ndarray
    root_quat: np.ndarray
    joint_pos: np.ndarray
    joint_vel: np.ndarray | None = None
    root_lin_vel: np.ndarray | None = None
    root_ang_vel: np.ndarray | None = None


def default_spawn(cm: CompiledModel) -> SpawnPose:
    """The authored pose: root at its declared position, joints at zero."""
    r = cm.model.root_index
    return SpawnPose(
        root_pos=cm.local_pos[r].copy(),
        root_quat=cm.local_quat[r].copy(),
        joint_pos=np.zeros(cm.n_joints),
    )


def _axis_quat(axis: np.ndarray, angle: float) -> np.ndarray:
    half = 0.5 * angle
    s = np.sin(half)
    return np.array([np.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def forward_kinematics(cm: CompiledModel, spawn: SpawnPose):
    """Body poses and velocities consistent with the given joint state."""
    B = cm.n_bodies
    pos = np.zeros((B, 3))
    quat = np.zeros((B, 4))
    linvel = np.zeros((B, 3))
    angvel = np.zeros((B, 3))
    jv = spawn.joint_vel if spawn.joint_vel is not None else np.zeros(cm.n_joints)

    r = cm.model.root_index
    pos[r] = spawn.root_pos
    quat[r] = spawn.root_quat
    if spawn.root_lin_vel is not None:
        linvel[r] = spawn.root_lin_vel
    if spawn.root_ang_vel is not None:
        angvel[r] = spawn.root_ang_vel

    body_joint = {int(cm.jnt_child[j]): j for j in range(cm.n_joints)}
    for b in range(B):
        if b == r:
            continue
        p = int(cm.parent[b])
        j = body_joint[b]
        theta = float(spawn.joint_pos[j])
        qdot = float(jv[j])
        q_local = cm.local_quat[b]
        l_pos = cm.local_pos[b]
        axis_c = cm.jnt_axis_c[j]
        a_w = _quat_rotate(quat[p], cm.jnt_axis_p[j])
        if cm.jnt_type[j] == 0:  # hinge
            anchor = cm.jnt_anchor_c[j]
            q_axis = _axis_quat(axis_c, theta)
            quat[b] = _quat_mul(_quat_mul(quat[p], q_local), q_axis)
            offset = l_pos + _quat_rotate(q_local, anchor - _quat_rotate(q_axis, anchor))
            pos[b] = pos[p] + _quat_rotate(quat[p], offset)
            angvel[b] = angvel[p] + a_w * qdot
            anchor_w = pos[p] + _quat_rotate(quat[p], cm.jnt_anchor_p[j])
            linvel[b] = (linvel[p] + np.cross(angvel[p], pos[b] - pos[p])
                         + np.cross(a_w * qdot, pos[b] - anchor_w))
        else:  # slide
            quat[b] = _quat_mul(quat[p], q_local)
            offset = l_pos + _quat_rotate(q_local, axis_c * theta)
            pos[b] = pos[p] + _quat_rotate(quat[p], offset)
            angvel[b] = angvel[p].copy()
            linvel[b] = linvel[p] + np.cross(angvel[p], pos[b] - pos[p]) + a_w * qdot
    return pos, quat, linvel, angvel


def probe_penetration(cm: CompiledModel, pos: np.ndarray, quat: np.ndarray,
                      terrain: Terrain) -> float:
    """Deepest terrain penetration over all contact features (m)."""
    worst = 0.0
    for s in range(cm.n_terrain_slots):
        b = int(cm.t_body[s])
        w = pos[b] + _quat_rotate(quat[b], cm.t_local[s])
        h = query_height(terrain, float(w[0]))
        depth = cm.t_radius[s] - (w[1] - h)
        worst = max(worst, float(depth))
    return worst


class SceneBatch:
    """State arrays for N instances of one compiled model."""

    def __init__(self, cm: CompiledModel, config: PhysicsConfig, n: int,
                 terrain: Terrain | None = None):
        if n < 1:
            raise InvalidValue("batch size must be >= 1")
        self.cm = cm
        self.config = config
        self.n = n
        B, J = cm.n_bodies, cm.n_joints
        St, Sp = cm.n_terrain_slots, cm.n_pair_slots
        self.pos = np.zeros((n, B, 3))
        self.quat = np.zeros((n, B, 4))
        self.quat[:, :, 0] = 1.0
        self.linvel = np.zeros((n, B, 3))
        self.angvel = np.zeros((n, B, 3))
        self.jpos = np.zeros((n, J))
        self.jvel = np.zeros((n, J))
        self.w_jlin = np.zeros((n, J, 3))
        self.w_jang = np.zeros((n, J, 3))
        self.w_jlim = np.zeros((n, J))
        self.w_tcon = np.zeros((n, St, 3))
        self.w_pcon = np.zeros((n, Sp, 3))
        self.touch_accum = np.zeros((n, B), dtype=np.uint8)
        self.touch_final = np.zeros((n, B), dtype=np.uint8)
        self.ct_active = np.zeros((n, St), dtype=np.uint8)
        self.ct_depth = np.zeros((n, St))
        self.ct_point = np.zeros((n, St, 3))
        self.ct_normal = np.zeros((n, St, 3))
        self.cp_active = np.zeros((n, Sp), dtype=np.uint8)
        self.cp_depth = np.zeros((n, Sp))
        self.cp_point = np.zeros((n, Sp, 3))
        self.cp_normal = np.zeros((n, Sp, 3))
        self.ok_flags = np.ones(n, dtype=np.uint8)
        self.time = np.zeros(n)
        self.step_count = np.zeros(n, dtype=np.int64)

        terrain = terrain or Terrain()
        self.terrains: list[Terrain] = [terrain] * n
        self.terr_kind = np.full(n, terrain.kind_code, dtype=np.int64)
        self.terr_heights = np.tile(terrain.heights, (n, 1))
        self.terr_spacing = terrain.spacing
        self.terr_x0 = terrain.x0

    def set_terrain(self, i: int, terrain: Terrain) -> None:
        m = len(terrain.heights)
        if m != self.terr_heights.shape[1]:
            if np.all(self.terr_kind == 0):
                self.terr_heights = np.zeros((self.n, m))
            else:
                raise InvalidValue(
                    "heightfield sample counts must match across a batch "
                    f"({m} vs {self.terr_heights.shape[1]})")
        if terrain.kind_code == 1 and (terrain.spacing != self.terr_spacing
                                       or terrain.x0 != self.terr_x0):
            if np.all(self.terr_kind == 0):
                self.terr_spacing = terrain.spacing
                self.terr_x0 = terrain.x0
            elif terrain.spacing != self.terr_spacing or terrain.x0 != self.terr_x0:
                raise InvalidValue("heightfield spacing/origin must match across a batch")
        self.terrains[i] = terrain
        self.terr_kind[i] = terrain.kind_code
        self.terr_heights[i, :] = terrain.heights if terrain.kind_code == 1 else 0.0

    def spawn_instance(self, i: int, spawn: SpawnPose, check: bool = True) -> None:
        cm = self.cm
        lo, hi = cm.jnt_range[:, 0], cm.jnt_range[:, 1]
        if np.any(spawn.joint_pos < lo) or np.any(spawn.joint_pos > hi):
            bad = int(np.argmax((spawn.joint_pos < lo) | (spawn.joint_pos > hi)))
            raise RangeViolation(
                f"joint {cm.model.joints[bad].name} spawn position "
                f"{spawn.joint_pos[bad]:.4f} outside range")
        pos, quat, linvel, angvel = forward_kinematics(cm, spawn)
        if check:
            depth = probe_penetration(cm, pos, quat, self.terrains[i])
            if depth > 0.01:
                raise SpawnPenetration(f"spawn penetrates terrain by {depth:.4f} m")
        self.pos[i] = pos
        self.quat[i] = quat
        self.linvel[i] = linvel
        self.angvel[i] = angvel
        self.jpos[i] = spawn.joint_pos
        self.jvel[i] = spawn.joint_vel if spawn.joint_vel is not None else 0.0
        self.w_jlin[i] = 0.0
        self.w_jang[i] = 0.0
        self.w_jlim[i] = 0.0
        self.w_tcon[i] = 0.0
        self.w_pcon[i] = 0.0
        self.touch_accum[i] = 0
        self.touch_final[i] = 0
        self.ct_active[i] = 0
        self.cp_active[i] = 0
        self.ok_flags[i] = 1
        self.time[i] = 0.0
        self.step_count[i] = 0

    def step(self, torques: np.ndarray, n_substeps: int = 1,
             active: np.ndarray | None = None) -> np.ndarray:
        """Advance active instances by n_substeps under held torques.

        Returns the per-instance ok flags (0 where the state went
        non-finite); callers decide whether to raise or force-reset.
        """
        cm = self.cm
        cfg = self.config
        if torques.shape != (self.n, len(cm.act_joint)):
            raise InvalidValue(
                f"torques shape {torques.shape} != {(self.n, len(cm.act_joint))}")
        if active is None:
            active = np.ones(self.n, dtype=np.uint8)
        step_batch(
            self.pos, self.quat, self.linvel, self.angvel, self.jpos, self.jvel,
            self.w_jlin, self.w_jang, self.w_jlim, self.w_tcon, self.w_pcon,
            self.touch_accum, self.touch_final,
            self.ct_active, self.ct_depth, self.ct_point, self.ct_normal,
            self.cp_active, self.cp_depth, self.cp_point, self.cp_normal,
            self.ok_flags,
            cm.parent, cm.inv_mass, cm.inv_inertia,
            cm.jnt_child, cm.jnt_parent, cm.jnt_type, cm.jnt_axis_c, cm.jnt_axis_p,
            cm.jnt_anchor_c, cm.jnt_anchor_p, cm.jnt_qrest, cm.jnt_range, cm.jnt_damping,
            cm.act_joint, cm.act_gear,
            cm.t_body, cm.t_local, cm.t_radius, cm.t_friction,
            cm.p_body_a, cm.p_body_b, cm.p_seg_a, cm.p_seg_b, cm.p_radius, cm.p_friction,
            self.terr_kind, self.terr_heights, self.terr_spacing, self.terr_x0,
            np.ascontiguousarray(torques), active,
            cfg.dt, cfg.gravity[0], cfg.gravity[1], cfg.gravity[2],
            cfg.solver_iterations, cfg.baumgarte_beta, cfg.contact_slop,
            cfg.friction_default, 1 if cfg.warm_start else 0,
            1 if cm.model.planar else 0,
            n_substeps,
        )
        self.time[active == 1] += n_substeps * cfg.dt
        self.step_count[active == 1] += n_substeps
        return self.ok_flags

    def contact_set(self, i: int) -> ContactSet:
        out = []
        for s in range(self.cm.n_terrain_slots):
            if self.ct_active[i, s]:
                out.append(ContactPoint(
                    body=int(self.cm.t_body[s]), geom=int(self.cm.t_geom[s]),
                    point=self.ct_point[i, s].copy(), normal=self.ct_normal[i, s].copy(),
                    depth=float(self.ct_depth[i, s])))
        for s in range(self.cm.n_pair_slots):
            if self.cp_active[i, s]:
                out.append(ContactPoint(
                    body=int(self.cm.p_body_a[s]), geom=int(self.cm.p_geom_a[s]),
                    point=self.cp_point[i, s].copy(), normal=self.cp_normal[i, s].copy(),
                    depth=float(self.cp_depth[i, s])))
        return tuple(out)


class SceneState:
    """Single-instance view; the operation-level physics handle."""

    def __init__(self, batch: SceneBatch, index: int = 0):
        self.batch = batch
        self.index = index

    @property
    def cm(self) -> CompiledModel:
        return self.batch.cm

    @property
    def bodies(self) -> list[RigidState]:
        i = self.index
        b = self.batch
        return [RigidState(b.pos[i, k].copy(), b.quat[i, k].copy(),
                           b.linvel[i, k].copy(), b.angvel[i, k].copy())
                for k in range(self.cm.n_bodies)]

    @property
    def joint_pos(self) -> np.ndarray:
        return self.batch.jpos[self.index]

    @property
    def joint_vel(self) -> np.ndarray:
        return self.batch.jvel[self.index]

    @property
    def contacts(self) -> ContactSet:
        return self.batch.contact_set(self.index)

    @property
    def time(self) -> float:
        return float(self.batch.time[self.index])

    @property
    def step_count(self) -> int:
        return int(self.batch.step_count[self.index])

    def body_pos(self, body: int) -> np.ndarray:
        return self.batch.pos[self.index, body]

    def body_quat(self, body: int) -> np.ndarray:
        return self.batch.quat[self.index, body]

    def body_linvel(self, body: int) -> np.ndarray:
        return self.batch.linvel[self.index, body]

    def body_angvel(self, body: int) -> np.ndarray:
        return self.batch.angvel[self.index, body]


# --- operation-level API -------------------------------------------------------

def init_scene(model, terrain: Terrain, config: PhysicsConfig,
               spawn: SpawnPose | None = None) -> SceneState:
    """Build a one-instance scene at the given (or authored) spawn pose."""
    cm = model if isinstance(model, CompiledModel) else compile_model(model)
    batch = SceneBatch(cm, config, 1, terrain)
    batch.spawn_instance(0, spawn or default_spawn(cm))
    return SceneState(batch, 0)


def apply_motor(action: float, actuator) -> float:
    """Torque = gear x action, with the action clamped into [-1, 1]."""
    a = min(max(action, -1.0), 1.0)
    return actuator.gear * a


def motor_torques(cm: CompiledModel, actions: np.ndarray) -> np.ndarray:
    """Vectorized apply_motor over a batch of action rows."""
    return cm.act_gear * np.clip(actions, -1.0, 1.0)


def step_physics(state: SceneState, joint_torques: np.ndarray,
                 config: PhysicsConfig | None = None,
                 terrain: Terrain | None = None) -> SceneState:
    """One physics substep; raises NonFiniteState instead of silently
    producing NaNs."""
    batch = state.batch
    torques = np.asarray(joint_torques, dtype=np.float64)
    if torques.shape != (len(batch.cm.act_joint),):
        raise InvalidValue(
            f"torque vector length {torques.shape} != actuator count "
            f"{len(batch.cm.act_joint)}")
    if not np.all(np.isfinite(torques)):
        raise InvalidValue("non-finite torque")
    if config is not None:
        batch.config = config
    if terrain is not None and terrain is not batch.terrains[state.index]:
        batch.set_terrain(state.index, terrain)
    ok = batch.step(torques.reshape(1, -1))
    if not ok[state.index]:
        raise NonFiniteState(f"instance {state.index} diverged")
    return state


def project_planar(state: SceneState, model=None) -> SceneState:
    """Zero out-of-plane state components; idempotent.

    The kernel applies this after every substep for planar models; the
    standalone form exists for spawned or hand-built states.
    """
    i = state.index
    b = state.batch
    b.pos[i, :, 2] = 0.0
    b.linvel[i, :, 2] = 0.0
    b.angvel[i, :, 0] = 0.0
    b.angvel[i, :, 1] = 0.0
    q = b.quat[i]
    norm = np.sqrt(q[:, 0] ** 2 + q[:, 3] ** 2)
    safe = norm > 1e-9
    q[safe, 0] = q[safe, 0] / norm[safe]
    q[safe, 3] = q[safe, 3] / norm[safe]
    q[~safe, 0] = 1.0
    q[~safe, 3] = 0.0
    q[:, 1] = 0.0
    q[:, 2] = 0.0
    return state
