"""Reference-motion imitation: keyframe format, sampling, reward, early
termination.

Reference motions come from a line-oriented keyframe text format (see
``parse_motion_text``) or from the two shipped procedural generators
(sinusoidal walker gait, pendulum swing).  The reward is a joint-space
pose match r = exp(-k_p * sum (q - qhat)^2); episodes end early when the
squared pose distance exceeds ``d_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DimensionMismatch, EmptyMotion, InvalidValue
from ..physics.scene import default_spawn
from .base import TaskWrapper

K_P = 2.0      # rad^-2
D_MAX = 1.5    # summed squared radians


@dataclass(frozen=True)
class MotionFrame:
    t: float
    joints: np.ndarray
    root: tuple[float, float, float]   # x, y, angle about z


@dataclass(frozen=True)
class ReferenceMotion:
    name: str
    frames: tuple[MotionFrame, ...]
    loop: bool = False

    def __post_init__(self) -> None:
        if not self.frames:
            raise EmptyMotion(self.name)
        times = [f.t for f in self.frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidValue(f"motion {self.name}: frame times must strictly increase")
        widths = {len(f.joints) for f in self.frames}
        if len(widths) != 1:
            raise InvalidValue(f"motion {self.name}: inconsistent joint counts")

    @property
    def n_joints(self) -> int:
        return len(self.frames[0].joints)

    @property
    def duration(self) -> float:
        return self.frames[-1].t


def sample_reference(motion: ReferenceMotion, t: float) -> tuple[np.ndarray, tuple]:
    """Linear interpolation between bracketing frames; wraps when
    looping, clamps otherwise."""
    frames = motion.frames
    dur = motion.duration
    if motion.loop and dur > 0:
        t = t % dur
    t = min(max(t, frames[0].t), dur)
    lo, hi = 0, len(frames) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if frames[mid].t <= t:
            lo = mid
        else:
            hi = mid
    a, b = frames[lo], frames[min(lo + 1, len(frames) - 1)]
    if b.t == a.t:
        return a.joints.copy(), a.root
    w = (t - a.t) / (b.t - a.t)
    joints = a.joints * (1 - w) + b.joints * w
    root = tuple((1 - w) * ra + w * rb for ra, rb in zip(a.root, b.root))
    return joints, root


def pose_distance(joints: np.ndarray, ref_joints: np.ndarray) -> float:
    if joints.shape != ref_joints.shape:
        raise DimensionMismatch(
            f"pose {joints.shape} vs reference {ref_joints.shape}")
    d = joints - ref_joints
    return float(np.dot(d, d))


def imitation_reward(inst, motion: ReferenceMotion, t: float,
                     k_p: float = K_P) -> float:
    """exp(-k_p * squared pose distance); 1 at a perfect match."""
    ref, _ = sample_reference(motion, t)
    return math.exp(-k_p * pose_distance(inst.batch.jpos[inst.index], ref))


def imitation_terminate(inst, motion: ReferenceMotion, t: float,
                        d_max: float = D_MAX) -> bool:
    """True when the pose has strayed beyond d_max (squared radians);
    pass d_max = inf to never terminate on distance."""
    if math.isinf(d_max):
        return False
    ref, _ = sample_reference(motion, t)
    return pose_distance(inst.batch.jpos[inst.index], ref) > d_max


# --- keyframe file format -------------------------------------------------------

def serialize_motion(motion: ReferenceMotion) -> str:
    lines = [f"motion {motion.name} joints={motion.n_joints} "
             f"loop={1 if motion.loop else 0}"]
    for f in motion.frames:
        vals = [f.t, *f.joints, *f.root]
        lines.append(" ".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def parse_motion_text(text: str) -> ReferenceMotion:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("motion "):
        raise InvalidValue("motion file must start with a 'motion' header")
    head = lines[0].split()
    if len(head) != 4:
        raise InvalidValue(f"bad motion header: {lines[0]!r}")
    name = head[1]
    try:
        n = int(head[2].removeprefix("joints="))
        loop = bool(int(head[3].removeprefix("loop=")))
    except ValueError as exc:
        raise InvalidValue(f"bad motion header: {lines[0]!r}") from exc
    frames = []
    for ln in lines[1:]:
        vals = [float(v) for v in ln.split()]
        if len(vals) != 1 + n + 3:
            raise InvalidValue(f"frame needs {1 + n + 3} values, got {len(vals)}")
        frames.append(MotionFrame(t=vals[0], joints=np.array(vals[1:1 + n]),
                                  root=(vals[-3], vals[-2], vals[-1])))
    if not frames:
        raise EmptyMotion(name)
    return ReferenceMotion(name=name, frames=tuple(frames), loop=loop)


def load_motion_file(path: str) -> ReferenceMotion:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_motion_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read motion file {path!r}: {exc}") from exc


# --- shipped procedural generators ---------------------------------------------

def pendulum_swing_motion(amplitude: float = 0.8, period: float = 2.0,
                          frame_dt: float = 0.02) -> ReferenceMotion:
    """Single-joint sinusoidal swing, loopable (first == last pose)."""
    steps = int(round(period / frame_dt))
    frames = [
        MotionFrame(t=k * frame_dt,
                    joints=np.array([amplitude * math.sin(2 * math.pi * k * frame_dt / period)]),
                    root=(0.0, 0.0, 0.0))
        for k in range(steps + 1)
    ]
    return ReferenceMotion(name="pendulum-swing", frames=tuple(frames), loop=True)


def walker_gait_motion(period: float = 1.0, frame_dt: float = 0.025,
                       hip_amp: float = 0.5, knee_amp: float = 0.5,
                       ankle_amp: float = 0.15, speed: float = 0.9,
                       root_height: float = 1.25) -> ReferenceMotion:
    """Sinusoidal alternating gait for the 6-joint walker.

    Joint order matches the walker2d asset: hip/knee/ankle left then
    right; legs run half a period out of phase and knees stay inside
    their one-sided range.
    """
    steps = int(round(period / frame_dt))
    frames = []
    for k in range(steps + 1):
        t = k * frame_dt
        ph = 2 * math.pi * t / period
        joints = []
        for leg_phase in (0.0, math.pi):
            hip = hip_amp * math.sin(ph + leg_phase)
            knee = -knee_amp * (0.5 - 0.5 * math.cos(ph + leg_phase))
            ankle = ankle_amp * math.sin(ph + leg_phase + math.pi / 2)
            joints += [hip, knee, ankle]
        frames.append(MotionFrame(t=t, joints=np.array(joints),
                                  root=(speed * t, root_height, 0.0)))
    return ReferenceMotion(name="walker-gait", frames=tuple(frames), loop=True)


def procedural_motion(name: str, spec=None) -> ReferenceMotion:
    if name in ("pendulum", "pendulum-swing"):
        return pendulum_swing_motion()
    if name in ("walker-gait", "walker_gait"):
        return walker_gait_motion()
    raise ConfigError(f"unknown procedural motion {name!r}")


# --- vec-scene wrapper ----------------------------------------------------------

class ImitationWrapper(TaskWrapper):
    """Replaces the reward with pose tracking and terminates on drift.

    Observations gain [sin 2*pi*phi, cos 2*pi*phi] of the motion phase;
    episodes spawn at the reference start.
    """

    def __init__(self, motion: ReferenceMotion, k_p: float = K_P,
                 d_max: float = D_MAX):
        self.motion = motion
        self.k_p = k_p
        self.d_max = d_max
        self.clock: dict[int, float] = {}

    def bind(self, scene) -> None:
        super().bind(scene)
        if self.motion.n_joints != scene.spec.act_dim:
            raise DimensionMismatch(
                f"motion {self.motion.name} has {self.motion.n_joints} joints, "
                f"env {scene.spec.env_id} has {scene.spec.act_dim}")

    def obs_extension_dim(self) -> int:
        return 2

    def pre_reset(self, i: int, inst) -> None:
        self.clock[i] = 0.0

    def post_reset(self, i: int, inst) -> None:
        # re-spawn onto the reference start pose (plus the usual noise)
        cm = inst.spec.cm
        ref_joints, root = sample_reference(self.motion, 0.0)
        spawn = default_spawn(cm)
        root_body = cm.model.bodies[cm.model.root_index]
        if not root_body.static:
            spawn.root_pos = spawn.root_pos.copy()
            spawn.root_pos[0] = root[0]
            spawn.root_pos[1] = root[1] if root[1] != 0.0 else spawn.root_pos[1]
            half = 0.5 * root[2]
            spawn.root_quat = np.array([math.cos(half), 0.0, 0.0, math.sin(half)])
        noise = inst.spec.reset_noise
        jp = ref_joints + inst.rng.uniform(-noise, noise, cm.n_joints)
        spawn.joint_pos = np.clip(jp, cm.jnt_range[:, 0], cm.jnt_range[:, 1])
        spawn.joint_vel = inst.rng.uniform(-noise, noise, cm.n_joints)
        inst.respawn(spawn)

    def extend_observation(self, i: int, inst) -> np.ndarray:
        dur = self.motion.duration
        phi = (self.clock.get(i, 0.0) % dur) / dur if dur > 0 else 0.0
        return np.array([math.sin(2 * math.pi * phi), math.cos(2 * math.pi * phi)])

    def reward(self, i: int, inst, base_reward: float) -> float:
        return imitation_reward(inst, self.motion, self.clock[i], self.k_p)

    def terminate(self, i: int, inst, base_status: str) -> str:
        if base_status == "running" and imitation_terminate(
                inst, self.motion, self.clock[i], self.d_max):
            inst.last_termination = "early_termination"
            return "terminated"
        return base_status

    def on_physics_advanced(self, i: int, inst) -> None:
        self.clock[i] = self.clock.get(i, 0.0) + self.scene.decision_dt
