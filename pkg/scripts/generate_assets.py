#!/usr/bin/env python3
"""Regenerate the shipped model XML files.

The four benchmark agents are re-derivations targeting the published
joint/action counts (hopper 4, walker 6, humanoid 21, ant 8); the
slider and pendulum are diagnostic rigs used by the trainer and
imitation tests.  Run from the repo root:

    python3 scripts/generate_assets.py
"""

import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ragmark.mjcf import (ActuatorSpec, ArticulatedModel, BodySpec, GeomSpec,
                          JointSpec, expand_multi_axis, parse_model, serialize_model)
from ragmark.physics import PhysicsConfig, Terrain, compile_model
from ragmark.physics.scene import default_spawn, forward_kinematics, probe_penetration

OUT = Path(__file__).resolve().parent.parent / "src" / "ragmark" / "assets"

# capsule local axis is +z; quats aligning it with +y / +x
Q_VERT = (math.cos(-math.pi / 4), math.sin(-math.pi / 4), 0.0, 0.0)   # z -> y
Q_ALONG_X = (math.cos(math.pi / 4), 0.0, math.sin(math.pi / 4), 0.0)  # z -> x
Q_ID = (1.0, 0.0, 0.0, 0.0)

D = math.radians


def axis_angle(ax, ay, az, angle):
    h = 0.5 * angle
    s = math.sin(h)
    n = math.sqrt(ax * ax + ay * ay + az * az)
    return (math.cos(h), ax / n * s, ay / n * s, az / n * s)


def hopper() -> ArticulatedModel:
    bodies = [
        BodySpec("pelvis", None, (0, 1.25, 0), Q_ID, 3.5, (0.03, 0.02, 0.03),
                 geoms=(GeomSpec("capsule", (0.12, 0.10), (0, 0, 0), Q_VERT),),
                 labels=frozenset({"pelvis"})),
        BodySpec("torso", 0, (0, 0.45, 0), Q_ID, 4.0, (0.06, 0.03, 0.06),
                 geoms=(GeomSpec("capsule", (0.11, 0.18), (0, 0, 0), Q_VERT),),
                 labels=frozenset({"torso", "head"})),
        BodySpec("thigh", 0, (0, -0.35, 0), Q_ID, 2.0, (0.04, 0.003, 0.04),
                 geoms=(GeomSpec("capsule", (0.07, 0.17), (0, 0, 0), Q_VERT),)),
        BodySpec("shin", 2, (0, -0.45, 0), Q_ID, 1.2, (0.03, 0.002, 0.03),
                 geoms=(GeomSpec("capsule", (0.06, 0.19), (0, 0, 0), Q_VERT),)),
        BodySpec("foot", 3, (0.06, -0.375, 0), Q_ID, 0.8, (0.002, 0.008, 0.008),
                 geoms=(GeomSpec("capsule", (0.055, 0.17), (0, 0, 0), Q_ALONG_X,
                                 friction=1.5),),
                 labels=frozenset({"foot"})),
    ]
    joints = [
        JointSpec("waist", 1, "hinge", (0, 0, 1), (D(-30), D(30)), 1.0, (0, -0.225, 0)),
        JointSpec("hip", 2, "hinge", (0, 0, 1), (D(-60), D(95)), 1.0, (0, 0.175, 0)),
        JointSpec("knee", 3, "hinge", (0, 0, 1), (D(-150), D(2)), 1.0, (0, 0.225, 0)),
        JointSpec("ankle", 4, "hinge", (0, 0, 1), (D(-45), D(45)), 0.5, (-0.06, 0.135, 0)),
    ]
    actuators = [
        ActuatorSpec(0, 100.0, "waist"),
        ActuatorSpec(1, 140.0, "hip"),
        ActuatorSpec(2, 120.0, "knee"),
        ActuatorSpec(3, 60.0, "ankle"),
    ]
    return ArticulatedModel("hopper", tuple(bodies), tuple(joints), tuple(actuators),
                            planar=True)


def walker2d() -> ArticulatedModel:
    bodies = [
        BodySpec("pelvis", None, (0, 1.25, 0), Q_ID, 4.5, (0.05, 0.03, 0.05),
                 geoms=(GeomSpec("capsule", (0.11, 0.16), (0, 0, 0), Q_VERT),),
                 labels=frozenset({"pelvis", "torso"})),
    ]
    joints = []
    actuators = []
    for side in ("left", "right"):
        base = len(bodies)
        foot_label = frozenset({"foot", f"{side}_foot"})
        bodies += [
            BodySpec(f"thigh_{side}", 0, (0, -0.475, 0), Q_ID, 2.5, (0.03, 0.002, 0.03),
                     geoms=(GeomSpec("capsule", (0.065, 0.16), (0, 0, 0), Q_VERT),),
                     collide_group="legs"),
            BodySpec(f"shin_{side}", base, (0, -0.45, 0), Q_ID, 1.5, (0.02, 0.0015, 0.02),
                     geoms=(GeomSpec("capsule", (0.055, 0.17), (0, 0, 0), Q_VERT),),
                     labels=frozenset({"foot"}), collide_group="legs"),
            BodySpec(f"foot_{side}", base + 1, (0.06, -0.265, 0), Q_ID, 0.7,
                     (0.001, 0.004, 0.004),
                     geoms=(GeomSpec("capsule", (0.05, 0.10), (0, 0, 0), Q_ALONG_X,
                                     friction=1.5),),
                     labels=foot_label, collide_group="legs"),
        ]
        joints += [
            JointSpec(f"hip_{side}", base, "hinge", (0, 0, 1), (D(-60), D(95)), 1.0,
                      (0, 0.225, 0)),
            JointSpec(f"knee_{side}", base + 1, "hinge", (0, 0, 1), (D(-150), D(2)), 1.0,
                      (0, 0.225, 0)),
            JointSpec(f"ankle_{side}", base + 2, "hinge", (0, 0, 1), (D(-45), D(45)), 0.5,
                      (-0.06, 0.04, 0)),
        ]
        j0 = len(actuators)
        actuators += [
            ActuatorSpec(j0, 120.0, f"hip_{side}"),
            ActuatorSpec(j0 + 1, 90.0, f"knee_{side}"),
            ActuatorSpec(j0 + 2, 60.0, f"ankle_{side}"),
        ]
    return ArticulatedModel("walker2d", tuple(bodies), tuple(joints), tuple(actuators),
                            planar=True)


def humanoid() -> ArticulatedModel:
    bodies = [
        BodySpec("pelvis", None, (0, 1.40, 0), Q_ID, 6.0, (0.03, 0.03, 0.03),
                 geoms=(GeomSpec("sphere", (0.11,), (0, 0, 0), Q_ID),),
                 labels=frozenset({"pelvis"})),
        BodySpec("torso", 0, (0, 0.30, 0), Q_ID, 9.0, (0.12, 0.07, 0.12),
                 geoms=(GeomSpec("capsule", (0.10, 0.14), (0, 0, 0), Q_VERT),
                        GeomSpec("sphere", (0.09,), (0, 0.30, 0), Q_ID)),
                 labels=frozenset({"torso", "head"})),
    ]
    joints = [
        JointSpec("abdomen_z", 1, "hinge", (0, 0, 1), (D(-45), D(45)), 2.0, (0, -0.15, 0)),
        JointSpec("abdomen_y", 1, "hinge", (0, 1, 0), (D(-40), D(40)), 2.0, (0, -0.15, 0)),
        JointSpec("abdomen_x", 1, "hinge", (1, 0, 0), (D(-35), D(35)), 2.0, (0, -0.15, 0)),
    ]
    actuators = [
        ActuatorSpec(0, 100.0, "abdomen_z"),
        ActuatorSpec(1, 80.0, "abdomen_y"),
        ActuatorSpec(2, 80.0, "abdomen_x"),
    ]
    for side, sz in (("left", 1.0), ("right", -1.0)):
        base = len(bodies)
        bodies += [
            BodySpec(f"upper_arm_{side}", 1, (0, -0.06, 0.26 * sz), Q_ID, 1.2,
                     (0.008, 0.001, 0.008),
                     geoms=(GeomSpec("capsule", (0.045, 0.13), (0, 0, 0), Q_VERT),)),
            BodySpec(f"lower_arm_{side}", base, (0, -0.31, 0), Q_ID, 0.8,
                     (0.005, 0.0008, 0.005),
                     geoms=(GeomSpec("capsule", (0.04, 0.11), (0, 0, 0), Q_VERT),)),
        ]
        nj = len(joints)
        joints += [
            JointSpec(f"shoulder_x_{side}", base, "hinge", (1, 0, 0), (D(-85), D(85)), 1.0,
                      (0, 0.18, -0.02 * sz)),
            JointSpec(f"shoulder_z_{side}", base, "hinge", (0, 0, 1), (D(-85), D(85)), 1.0,
                      (0, 0.18, -0.02 * sz)),
            JointSpec(f"elbow_{side}", base + 1, "hinge", (0, 0, 1), (D(-120), D(2)), 1.0,
                      (0, 0.155, 0)),
        ]
        actuators += [
            ActuatorSpec(nj, 60.0, f"shoulder_x_{side}"),
            ActuatorSpec(nj + 1, 60.0, f"shoulder_z_{side}"),
            ActuatorSpec(nj + 2, 50.0, f"elbow_{side}"),
        ]
    for side, sz in (("left", 1.0), ("right", -1.0)):
        base = len(bodies)
        bodies += [
            BodySpec(f"thigh_{side}", 0, (0, -0.35, 0.09 * sz), Q_ID, 3.0,
                     (0.04, 0.003, 0.04),
                     geoms=(GeomSpec("capsule", (0.07, 0.17), (0, 0, 0), Q_VERT),)),
            BodySpec(f"shin_{side}", base, (0, -0.50, 0), Q_ID, 2.0, (0.035, 0.002, 0.035),
                     geoms=(GeomSpec("capsule", (0.06, 0.20), (0, 0, 0), Q_VERT),),
                     labels=frozenset({"foot"})),
            BodySpec(f"foot_{side}", base + 1, (0.05, -0.48, 0), Q_ID, 1.0,
                     (0.002, 0.006, 0.006),
                     geoms=(GeomSpec("capsule", (0.05, 0.12), (0, 0, 0), Q_ALONG_X,
                                     friction=1.5),),
                     labels=frozenset({"foot", f"{side}_foot"})),
        ]
        nj = len(joints)
        joints += [
            JointSpec(f"hip_x_{side}", base, "hinge", (1, 0, 0), (D(-40), D(40)), 2.0,
                      (0, 0.21, 0)),
            JointSpec(f"hip_z_{side}", base, "hinge", (0, 0, 1), (D(-110), D(35)), 2.0,
                      (0, 0.21, 0)),
            JointSpec(f"hip_y_{side}", base, "hinge", (0, 1, 0), (D(-40), D(40)), 2.0,
                      (0, 0.21, 0)),
            JointSpec(f"knee_{side}", base + 1, "hinge", (0, 0, 1), (D(-150), D(2)), 2.0,
                      (0, 0.26, 0)),
            JointSpec(f"ankle_z_{side}", base + 2, "hinge", (0, 0, 1), (D(-50), D(50)), 1.0,
                      (-0.05, 0.05, 0)),
            JointSpec(f"ankle_x_{side}", base + 2, "hinge", (1, 0, 0), (D(-30), D(30)), 1.0,
                      (-0.05, 0.05, 0)),
        ]
        actuators += [
            ActuatorSpec(nj, 100.0, f"hip_x_{side}"),
            ActuatorSpec(nj + 1, 120.0, f"hip_z_{side}"),
            ActuatorSpec(nj + 2, 60.0, f"hip_y_{side}"),
            ActuatorSpec(nj + 3, 120.0, f"knee_{side}"),
            ActuatorSpec(nj + 4, 50.0, f"ankle_z_{side}"),
            ActuatorSpec(nj + 5, 50.0, f"ankle_x_{side}"),
        ]
    return ArticulatedModel("humanoid", tuple(bodies), tuple(joints), tuple(actuators),
                            planar=False)


def ant() -> ArticulatedModel:
    bodies = [
        BodySpec("torso", None, (0, 0.35, 0), Q_ID, 4.0, (0.03, 0.03, 0.03),
                 geoms=(GeomSpec("sphere", (0.15,), (0, 0, 0), Q_ID),),
                 labels=frozenset({"pelvis", "torso"})),
    ]
    joints = []
    actuators = []
    for i in range(4):
        phi = math.radians(45.0 + 90.0 * i)
        d = (math.cos(phi), 0.0, math.sin(phi))
        alpha = math.pi / 2 - phi  # rotate capsule +z onto d, about +y
        q_upper = axis_angle(0, 1, 0, alpha)
        base = len(bodies)
        upper_center = (0.29 * d[0], -0.02, 0.29 * d[2])
        bodies.append(BodySpec(
            f"upper_leg_{i}", 0, upper_center, q_upper, 1.0, (0.006, 0.006, 0.0008),
            geoms=(GeomSpec("capsule", (0.05, 0.12), (0, 0, 0), Q_ID),)))
        joints.append(JointSpec(
            f"hip_{i}", base, "hinge", (0, 1, 0), (D(-35), D(35)), 1.5, (0, 0.02, -0.15)))
        # lower leg slants down-outward at 45 degrees within the leg plane
        q_lower = axis_angle(1, 0, 0, math.pi / 4)
        bodies.append(BodySpec(
            f"lower_leg_{i}", base, (0, -0.1414, 0.2614), q_lower, 0.6,
            (0.005, 0.005, 0.0005),
            geoms=(GeomSpec("capsule", (0.045, 0.18), (0, 0, 0), Q_ID, friction=1.5),),
            labels=frozenset({"foot"})))
        joints.append(JointSpec(
            f"ankle_{i}", base + 1, "hinge", (-1, 0, 0), (D(-50), D(50)), 1.5, (0, 0, -0.2)))
        actuators += [
            ActuatorSpec(len(joints) - 2, 40.0, f"hip_{i}"),
            ActuatorSpec(len(joints) - 1, 40.0, f"ankle_{i}"),
        ]
    return ArticulatedModel("ant", tuple(bodies), tuple(joints), tuple(actuators),
                            planar=False)


def slider() -> ArticulatedModel:
    bodies = [
        BodySpec("rail", None, (0, 0.5, 0), Q_ID, 100.0, (1, 1, 1), static=True,
                 geoms=(GeomSpec("sphere", (0.02,), (0, 0, 0), Q_ID),)),
        BodySpec("slider", 0, (0, 0, 0), Q_ID, 2.0, (0.013, 0.013, 0.013),
                 geoms=(GeomSpec("box", (0.1, 0.1, 0.1), (0, 0, 0), Q_ID),),
                 labels=frozenset({"pelvis"})),
    ]
    joints = [JointSpec("slide_x", 1, "slide", (1, 0, 0), (-500.0, 500.0), 2.0, (0, 0, 0))]
    actuators = [ActuatorSpec(0, 10.0, "slide_x")]
    return ArticulatedModel("slider", tuple(bodies), tuple(joints), tuple(actuators),
                            planar=True)


def pendulum() -> ArticulatedModel:
    bodies = [
        BodySpec("base", None, (0, 2.0, 0), Q_ID, 10.0, (1, 1, 1), static=True,
                 geoms=(GeomSpec("sphere", (0.05,), (0, 0, 0), Q_ID),)),
        BodySpec("bob", 0, (0, -1.0, 0), Q_ID, 1.0, (0.0026, 0.0026, 0.0026),
                 geoms=(GeomSpec("sphere", (0.08,), (0, 0, 0), Q_ID),),
                 labels=frozenset({"pelvis"})),
    ]
    joints = [JointSpec("swing", 1, "hinge", (0, 0, 1), (D(-170), D(170)), 0.3, (0, 1.0, 0))]
    actuators = [ActuatorSpec(0, 15.0, "swing")]
    return ArticulatedModel("pendulum", tuple(bodies), tuple(joints), tuple(actuators),
                            planar=True)


def check(model: ArticulatedModel) -> None:
    expanded = expand_multi_axis(model)
    cm = compile_model(expanded)
    spawn = default_spawn(cm)
    pos, quat, _, _ = forward_kinematics(cm, spawn)
    depth = probe_penetration(cm, pos, quat, Terrain())
    lowest = min(
        float(pos[int(cm.t_body[s]), 1]
              + (pos[int(cm.t_body[s])] * 0)[1]) for s in range(cm.n_terrain_slots)
    ) if cm.n_terrain_slots else float("nan")
    print(f"  {model.name}: bodies={len(expanded.bodies)} joints={len(expanded.joints)}"
          f" act={len(model.actuators)} pairs={cm.n_pair_slots}"
          f" spawn-penetration={depth:+.4f} m")
    assert depth <= 0.005, f"{model.name}: spawn penetrates by {depth}"
    # pair clearance at spawn
    from ragmark.physics.kernels import _closest_segment_segment
    for s in range(cm.n_pair_slots):
        ba, bb = int(cm.p_body_a[s]), int(cm.p_body_b[s])
        import numpy as np
        from ragmark.physics.compiled import _quat_rotate
        a0 = pos[ba] + _quat_rotate(quat[ba], cm.p_seg_a[s, 0])
        a1 = pos[ba] + _quat_rotate(quat[ba], cm.p_seg_a[s, 1])
        b0 = pos[bb] + _quat_rotate(quat[bb], cm.p_seg_b[s, 0])
        b1 = pos[bb] + _quat_rotate(quat[bb], cm.p_seg_b[s, 1])
        r = _closest_segment_segment(a0, a1, b0, b1)
        dist = np.linalg.norm(np.array(r[:3]) - np.array(r[3:]))
        gap = dist - cm.p_radius[s].sum()
        assert gap > 0.0, (f"{model.name}: pair {cm.model.bodies[ba].name}/"
                           f"{cm.model.bodies[bb].name} overlaps at spawn by {-gap:.4f}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for build in (hopper, walker2d, humanoid, ant, slider, pendulum):
        model = build()
        check(model)
        text = serialize_model(model)
        reparsed = parse_model(text)
        assert reparsed == model, f"{model.name}: serialize/parse mismatch"
        (OUT / f"{model.name}.xml").write_text(text, encoding="utf-8")
        print(f"  wrote {model.name}.xml")


if __name__ == "__main__":
    main()
