"""Flattening of an articulated model into solver-ready arrays.

The solver consumes plain float64/int64 arrays, so the kinematic tree,
joint frames and the collision slot table are precomputed here once per
model.  Compilation requires the expanded (single-axis) form: every
non-root body must carry exactly one joint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidValue
from ..mjcf import ArticulatedModel

HINGE = 0
SLIDE = 1

# terrain slot feature kinds
FEAT_SPHERE = 0
FEAT_CORNER = 1


def _quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    u = np.array([x, y, z])
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * v)


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


@dataclass
class CompiledModel:
    model: ArticulatedModel

    # bodies
    parent: np.ndarray = field(init=False)        # (B,) i8, -1 for root
    mass: np.ndarray = field(init=False)          # (B,)
    inv_mass: np.ndarray = field(init=False)      # (B,) 0 for static
    inv_inertia: np.ndarray = field(init=False)   # (B,3) body-frame principal
    local_pos: np.ndarray = field(init=False)     # (B,3)
    local_quat: np.ndarray = field(init=False)    # (B,4)

    # joints (one per non-root body)
    jnt_child: np.ndarray = field(init=False)     # (J,) i8
    jnt_parent: np.ndarray = field(init=False)    # (J,) i8
    jnt_type: np.ndarray = field(init=False)      # (J,) i8
    jnt_axis_c: np.ndarray = field(init=False)    # (J,3) child frame
    jnt_axis_p: np.ndarray = field(init=False)    # (J,3) parent frame
    jnt_anchor_c: np.ndarray = field(init=False)  # (J,3) child frame
    jnt_anchor_p: np.ndarray = field(init=False)  # (J,3) parent frame
    jnt_qrest: np.ndarray = field(init=False)     # (J,4) child local_quat
    jnt_range: np.ndarray = field(init=False)     # (J,2)
    jnt_damping: np.ndarray = field(init=False)   # (J,)

    # actuators
    act_joint: np.ndarray = field(init=False)     # (A,) i8
    act_gear: np.ndarray = field(init=False)      # (A,)

    # terrain contact slots: one point feature (sphere center, capsule end,
    # box corner) per slot, expressed in the owning body frame
    t_body: np.ndarray = field(init=False)        # (St,) i8
    t_geom: np.ndarray = field(init=False)        # (St,) i8 geom flat index
    t_local: np.ndarray = field(init=False)       # (St,3)
    t_radius: np.ndarray = field(init=False)      # (St,)
    t_friction: np.ndarray = field(init=False)    # (St,)

    # self-collision pair slots: capsule/sphere segments on two bodies
    p_body_a: np.ndarray = field(init=False)      # (Sp,) i8
    p_body_b: np.ndarray = field(init=False)
    p_geom_a: np.ndarray = field(init=False)
    p_geom_b: np.ndarray = field(init=False)
    p_seg_a: np.ndarray = field(init=False)       # (Sp,2,3) endpoints, A frame
    p_seg_b: np.ndarray = field(init=False)
    p_radius: np.ndarray = field(init=False)      # (Sp,2) radii a, b
    p_friction: np.ndarray = field(init=False)    # (Sp,)

    # label lookups used by the environment layer
    pelvis_index: int = field(init=False, default=-1)
    foot_bodies: np.ndarray = field(init=False)   # (F,) i8, label order by index
    foot_flag: np.ndarray = field(init=False)     # (B,) u1
    observed_bodies: np.ndarray = field(init=False)  # (Bo,) authored, non-root, non-pelvis

    def __post_init__(self) -> None:
        m = self.model
        bodies = m.bodies
        n = len(bodies)

        per_body_joint: dict[int, int] = {}
        for j, spec in enumerate(m.joints):
            if spec.child_body in per_body_joint:
                raise InvalidValue(
                    f"body {bodies[spec.child_body].name} has multiple joints; "
                    "expand_multi_axis before compiling")
            per_body_joint[spec.child_body] = j
        for i, b in enumerate(bodies):
            if b.parent is not None and i not in per_body_joint:
                raise InvalidValue(f"non-root body {b.name} has no joint")

        self.parent = np.array([-1 if b.parent is None else b.parent for b in bodies], dtype=np.int64)
        self.mass = np.array([b.mass for b in bodies])
        self.inv_mass = np.array([0.0 if b.static else 1.0 / b.mass for b in bodies])
        self.inv_inertia = np.array(
            [[0.0, 0.0, 0.0] if b.static else [1.0 / c for c in b.inertia] for b in bodies])
        self.local_pos = np.array([b.local_pos for b in bodies])
        self.local_quat = np.array([b.local_quat for b in bodies])

        nj = len(m.joints)
        self.jnt_child = np.empty(nj, dtype=np.int64)
        self.jnt_parent = np.empty(nj, dtype=np.int64)
        self.jnt_type = np.empty(nj, dtype=np.int64)
        self.jnt_axis_c = np.empty((nj, 3))
        self.jnt_axis_p = np.empty((nj, 3))
        self.jnt_anchor_c = np.empty((nj, 3))
        self.jnt_anchor_p = np.empty((nj, 3))
        self.jnt_qrest = np.empty((nj, 4))
        self.jnt_range = np.empty((nj, 2))
        self.jnt_damping = np.empty(nj)
        for j, spec in enumerate(m.joints):
            child = bodies[spec.child_body]
            q_local = np.array(child.local_quat)
            axis = np.array(spec.axis)
            anchor = np.array(spec.anchor)
            self.jnt_child[j] = spec.child_body
            self.jnt_parent[j] = child.parent if child.parent is not None else -1
            self.jnt_type[j] = HINGE if spec.type == "hinge" else SLIDE
            self.jnt_axis_c[j] = axis
            self.jnt_axis_p[j] = _quat_rotate(q_local, axis)
            self.jnt_anchor_c[j] = anchor
            self.jnt_anchor_p[j] = np.array(child.local_pos) + _quat_rotate(q_local, anchor)
            self.jnt_qrest[j] = q_local
            self.jnt_range[j] = spec.range
            self.jnt_damping[j] = spec.damping

        self.act_joint = np.array([a.joint for a in m.actuators], dtype=np.int64)
        self.act_gear = np.array([a.gear for a in m.actuators])

        self._build_contact_slots()

        pelvises = m.labeled("pelvis")
        self.pelvis_index = pelvises[0] if pelvises else m.root_index
        self.foot_bodies = np.array(m.labeled("foot"), dtype=np.int64)
        self.foot_flag = np.zeros(n, dtype=np.uint8)
        self.foot_flag[self.foot_bodies] = 1
        self.observed_bodies = np.array(
            [i for i, b in enumerate(bodies)
             if not b.synthetic and i != m.root_index and i != self.pelvis_index],
            dtype=np.int64)

    def _build_contact_slots(self) -> None:
        m = self.model
        t_body: list[int] = []
        t_geom: list[int] = []
        t_local: list[np.ndarray] = []
        t_radius: list[float] = []
        t_friction: list[float] = []

        geom_flat: list[tuple[int, int]] = []  # (body, geom-within-body)
        for bi, body in enumerate(m.bodies):
            for gi, g in enumerate(body.geoms):
                geom_flat.append((bi, gi))

        for flat_idx, (bi, gi) in enumerate(geom_flat):
            body = m.bodies[bi]
            g = body.geoms[gi]
            if body.static or g.shape == "plane":
                continue
            gq = np.array(g.local_quat)
            gp = np.array(g.local_pos)
            if g.shape == "sphere":
                t_body.append(bi); t_geom.append(flat_idx)
                t_local.append(gp); t_radius.append(g.size[0]); t_friction.append(g.friction)
            elif g.shape == "capsule":
                r, hl = g.size
                ax = _quat_rotate(gq, np.array([0.0, 0.0, 1.0]))
                for s in (-1.0, 1.0):
                    t_body.append(bi); t_geom.append(flat_idx)
                    t_local.append(gp + s * hl * ax)
                    t_radius.append(r); t_friction.append(g.friction)
            elif g.shape == "box":
                hx, hy, hz = g.size
                for sx in (-1.0, 1.0):
                    for sy in (-1.0, 1.0):
                        for sz in (-1.0, 1.0):
                            corner = gp + _quat_rotate(gq, np.array([sx * hx, sy * hy, sz * hz]))
                            t_body.append(bi); t_geom.append(flat_idx)
                            t_local.append(corner); t_radius.append(0.0)
                            t_friction.append(g.friction)

        self.t_body = np.array(t_body, dtype=np.int64)
        self.t_geom = np.array(t_geom, dtype=np.int64)
        self.t_local = np.array(t_local).reshape(-1, 3)
        self.t_radius = np.array(t_radius)
        self.t_friction = np.array(t_friction)

        # self-collision pairs: sphere/capsule geoms on non-adjacent dynamic
        # bodies, skipping bodies that share a collide_group
        adjacency = self._authored_adjacency()
        pa, pb, ga, gb, sa, sb, rr, fr = [], [], [], [], [], [], [], []
        candidates = [
            (flat_idx, bi, gi) for flat_idx, (bi, gi) in enumerate(geom_flat)
            if m.bodies[bi].geoms[gi].shape in ("sphere", "capsule")
            and not m.bodies[bi].static
        ]
        for i in range(len(candidates)):
            for k in range(i + 1, len(candidates)):
                fa, ba, gia = candidates[i]
                fb, bb, gib = candidates[k]
                if ba == bb or (ba, bb) in adjacency:
                    continue
                body_a, body_b = m.bodies[ba], m.bodies[bb]
                if body_a.collide_group and body_a.collide_group == body_b.collide_group:
                    continue
                geom_a, geom_b = body_a.geoms[gia], body_b.geoms[gib]
                pa.append(ba); pb.append(bb); ga.append(fa); gb.append(fb)
                sa.append(self._segment(geom_a)); sb.append(self._segment(geom_b))
                rr.append([geom_a.size[0], geom_b.size[0]])
                fr.append(float(np.sqrt(geom_a.friction * geom_b.friction)))
        self.p_body_a = np.array(pa, dtype=np.int64)
        self.p_body_b = np.array(pb, dtype=np.int64)
        self.p_geom_a = np.array(ga, dtype=np.int64)
        self.p_geom_b = np.array(gb, dtype=np.int64)
        self.p_seg_a = np.array(sa).reshape(-1, 2, 3)
        self.p_seg_b = np.array(sb).reshape(-1, 2, 3)
        self.p_radius = np.array(rr).reshape(-1, 2)
        self.p_friction = np.array(fr)

    @staticmethod
    def _segment(g) -> np.ndarray:
        gp = np.array(g.local_pos)
        if g.shape == "sphere":
            return np.stack([gp, gp])
        r, hl = g.size
        ax = _quat_rotate(np.array(g.local_quat), np.array([0.0, 0.0, 1.0]))
        return np.stack([gp - hl * ax, gp + hl * ax])

    def _authored_adjacency(self) -> set[tuple[int, int]]:
        """Pairs connected by a joint chain passing only through synthetic bodies."""
        m = self.model
        pairs: set[tuple[int, int]] = set()

        def authored_ancestor(i: int) -> int | None:
            p = m.bodies[i].parent
            while p is not None and m.bodies[p].synthetic:
                p = m.bodies[p].parent
            return p

        for i, b in enumerate(m.bodies):
            if b.synthetic:
                continue
            p = authored_ancestor(i)
            if p is not None:
                pairs.add((p, i))
                pairs.add((i, p))
        return pairs

    @property
    def n_bodies(self) -> int:
        return len(self.model.bodies)

    @property
    def n_joints(self) -> int:
        return len(self.model.joints)

    @property
    def n_terrain_slots(self) -> int:
        return len(self.t_body)

    @property
    def n_pair_slots(self) -> int:
        return len(self.p_body_a)

    def geom_table(self) -> list[dict]:
        """Flat geom list for renderers: body, shape, size, local pose."""
        out = []
        for bi, body in enumerate(self.model.bodies):
            for g in body.geoms:
                out.append({
                    "body": bi, "shape": g.shape, "size": list(g.size),
                    "pos": list(g.local_pos), "quat": list(g.local_quat),
                })
        return out


_COMPILE_CACHE: dict[int, CompiledModel] = {}


def compile_model(model: ArticulatedModel) -> CompiledModel:
    """Compile (with memoization on model identity)."""
    key = id(model)
    cached = _COMPILE_CACHE.get(key)
    if cached is not None and cached.model is model:
        return cached
    compiled = CompiledModel(model)
    _COMPILE_CACHE[key] = compiled
    return compiled
