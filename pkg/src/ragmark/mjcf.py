"""MJCF-subset model parser.

Supported element set is frozen: ``mujoco``, ``worldbody``, nested ``body``
(pos/quat/labels/static), ``inertial`` (mass, diaginertia), ``geom``
(sphere/capsule/box/plane), ``joint`` (hinge/slide), and ``actuator`` with
``motor`` children.  Anything else raises :class:`UnknownTag`.

Angles in the source XML follow the MJCF convention and are given in
degrees; they are converted to radians at parse time.  The canonical
serializer emits hinge ranges through the explicit ``range_rad`` attribute
so that serialize -> reparse is bit-exact.

A body may declare up to three joints; :func:`expand_multi_axis` rewrites
such models into chains of single-axis joints through synthesized
intermediate bodies, which is the form the physics core consumes.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace

from .errors import CycleDetected, InvalidValue, MalformedXml, MissingLabel, UnknownTag

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]  # (w, x, y, z)

GEOM_SHAPES = ("sphere", "capsule", "box", "plane")
JOINT_TYPES = ("hinge", "slide")

# mass/inertia given to bodies synthesized by expand_multi_axis; small but
# positive so the maximal-coordinate solver keeps invertible inertia
SYNTH_MASS = 0.01
SYNTH_INERTIA = 1e-4

_ALLOWED_ATTRS = {
    "mujoco": {"model", "planar"},
    "worldbody": set(),
    "body": {"name", "pos", "quat", "labels", "static", "synthetic", "collide_group"},
    "inertial": {"mass", "diaginertia"},
    "geom": {"name", "type", "size", "pos", "quat", "friction"},
    "joint": {"name", "type", "axis", "pos", "range", "range_rad", "damping"},
    "actuator": set(),
    "motor": {"name", "joint", "gear"},
}


@dataclass(frozen=True)
class GeomSpec:
    shape: str
    size: tuple[float, ...]
    local_pos: Vec3 = (0.0, 0.0, 0.0)
    local_quat: Quat = (1.0, 0.0, 0.0, 0.0)
    friction: float = 1.0
    name: str = ""


@dataclass(frozen=True)
class BodySpec:
    name: str
    parent: int | None
    local_pos: Vec3
    local_quat: Quat
    mass: float
    inertia: Vec3
    geoms: tuple[GeomSpec, ...] = ()
    labels: frozenset[str] = frozenset()
    static: bool = False
    synthetic: bool = False
    # bodies sharing a non-empty group never generate mutual contacts
    collide_group: str = ""


@dataclass(frozen=True)
class JointSpec:
    name: str
    child_body: int
    type: str
    axis: Vec3
    range: tuple[float, float]
    damping: float = 0.0
    anchor: Vec3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ActuatorSpec:
    joint: int
    gear: float
    name: str = ""


@dataclass(frozen=True)
class ArticulatedModel:
    name: str
    bodies: tuple[BodySpec, ...]
    joints: tuple[JointSpec, ...]
    actuators: tuple[ActuatorSpec, ...]
    root_index: int = 0
    planar: bool = False

    @property
    def n_bodies(self) -> int:
        return len(self.bodies)

    @property
    def act_dim(self) -> int:
        return len(self.actuators)

    def joints_of_body(self, body_index: int) -> list[int]:
        return [j for j, spec in enumerate(self.joints) if spec.child_body == body_index]

    def body_index(self, name: str) -> int:
        for i, b in enumerate(self.bodies):
            if b.name == name:
                return i
        raise KeyError(name)

    def labeled(self, tag: str) -> list[int]:
        return [i for i, b in enumerate(self.bodies) if tag in b.labels]


# --- attribute parsing helpers ----------------------------------------------

def _floats(text: str, n: int | None, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split())
    except ValueError as exc:
        raise InvalidValue(f"{what}: cannot parse floats from {text!r}") from exc
    if n is not None and len(vals) != n:
        raise InvalidValue(f"{what}: expected {n} values, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise InvalidValue(f"{what}: non-finite value in {text!r}")
    return vals


def _unit3(vals: tuple[float, ...], what: str) -> Vec3:
    norm = math.sqrt(sum(v * v for v in vals))
    if norm < 1e-8:
        raise InvalidValue(f"{what}: zero-length vector")
    if abs(norm - 1.0) < 1e-12:
        return (vals[0], vals[1], vals[2])
    return (vals[0] / norm, vals[1] / norm, vals[2] / norm)


def _unit_quat(vals: tuple[float, ...], what: str) -> Quat:
    norm = math.sqrt(sum(v * v for v in vals))
    if norm < 1e-8:
        raise InvalidValue(f"{what}: degenerate quaternion")
    if abs(norm - 1.0) < 1e-12:
        return (vals[0], vals[1], vals[2], vals[3])
    return (vals[0] / norm, vals[1] / norm, vals[2] / norm, vals[3] / norm)


def _check_attrs(elem: ET.Element) -> None:
    allowed = _ALLOWED_ATTRS.get(elem.tag)
    if allowed is None:
        raise UnknownTag(f"unsupported element <{elem.tag}>")
    for attr in elem.attrib:
        if attr not in allowed:
            raise UnknownTag(f"unsupported attribute {attr!r} on <{elem.tag}>")


def _parse_bool(text: str, what: str) -> bool:
    if text in ("true", "1"):
        return True
    if text in ("false", "0"):
        return False
    raise InvalidValue(f"{what}: expected boolean, got {text!r}")


# --- parsing -----------------------------------------------------------------

def parse_model(source: str) -> ArticulatedModel:
    """Parse MJCF-subset XML text into a validated model.

    Element order in the file fixes body/joint/actuator indices, so
    identical bytes always yield structurally identical models.
    """
    try:
        root = ET.fromstring(source)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    if root.tag != "mujoco":
        raise UnknownTag(f"expected <mujoco> root, got <{root.tag}>")
    _check_attrs(root)
    name = root.get("model", "model")
    planar = _parse_bool(root.get("planar", "false"), "mujoco.planar")

    bodies: list[BodySpec] = []
    joints: list[JointSpec] = []
    joint_names: dict[str, int] = {}
    worldbody = None
    actuator_elem = None
    for child in root:
        if child.tag == "worldbody":
            if worldbody is not None:
                raise InvalidValue("multiple <worldbody> sections")
            worldbody = child
        elif child.tag == "actuator":
            if actuator_elem is not None:
                raise InvalidValue("multiple <actuator> sections")
            actuator_elem = child
        else:
            raise UnknownTag(f"unsupported element <{child.tag}> under <mujoco>")
    if worldbody is None:
        raise InvalidValue("missing <worldbody>")
    _check_attrs(worldbody)

    top = [c for c in worldbody]
    if len(top) != 1 or top[0].tag != "body":
        raise InvalidValue("worldbody must contain exactly one root <body>")

    def parse_body(elem: ET.Element, parent: int | None) -> None:
        _check_attrs(elem)
        index = len(bodies)
        bname = elem.get("name", f"body{index}")
        pos = _floats(elem.get("pos", "0 0 0"), 3, f"body {bname} pos")
        quat = _unit_quat(_floats(elem.get("quat", "1 0 0 0"), 4, f"body {bname} quat"),
                          f"body {bname} quat")
        labels = frozenset(elem.get("labels", "").split())
        static = _parse_bool(elem.get("static", "false"), f"body {bname} static")
        synthetic = _parse_bool(elem.get("synthetic", "false"), f"body {bname} synthetic")
        collide_group = elem.get("collide_group", "")
        if static and parent is not None:
            raise InvalidValue(f"body {bname}: only the root body may be static")

        mass = None
        inertia = None
        geoms: list[GeomSpec] = []
        body_joint_count = 0
        children: list[ET.Element] = []
        for sub in elem:
            if sub.tag == "inertial":
                _check_attrs(sub)
                if mass is not None:
                    raise InvalidValue(f"body {bname}: duplicate <inertial>")
                mass = _floats(sub.get("mass", ""), 1, f"body {bname} mass")[0]
                inertia = _floats(sub.get("diaginertia", ""), 3, f"body {bname} diaginertia")
            elif sub.tag == "geom":
                _check_attrs(sub)
                geoms.append(_parse_geom(sub, bname))
            elif sub.tag == "joint":
                _check_attrs(sub)
                if parent is None:
                    raise InvalidValue(f"body {bname}: root body takes no joint")
                if body_joint_count >= 3:
                    raise InvalidValue(f"body {bname}: more than 3 joint axes")
                spec = _parse_joint(sub, index, len(joints))
                if spec.name in joint_names:
                    raise InvalidValue(f"duplicate joint name {spec.name!r}")
                joint_names[spec.name] = len(joints)
                joints.append(spec)
                body_joint_count += 1
            elif sub.tag == "body":
                children.append(sub)
            else:
                raise UnknownTag(f"unsupported element <{sub.tag}> under <body>")
        if mass is None or inertia is None:
            raise InvalidValue(f"body {bname}: missing <inertial mass diaginertia>")
        if mass <= 0:
            raise InvalidValue(f"body {bname}: mass must be > 0, got {mass}")
        if any(i <= 0 for i in inertia):
            raise InvalidValue(f"body {bname}: inertia components must be > 0")

        bodies.append(BodySpec(
            name=bname, parent=parent, local_pos=pos, local_quat=quat,
            mass=mass, inertia=(inertia[0], inertia[1], inertia[2]),
            geoms=tuple(geoms), labels=labels, static=static, synthetic=synthetic,
            collide_group=collide_group,
        ))
        for sub in children:
            parse_body(sub, index)

    parse_body(top[0], None)

    actuators: list[ActuatorSpec] = []
    if actuator_elem is not None:
        _check_attrs(actuator_elem)
        seen_joints: set[int] = set()
        for sub in actuator_elem:
            if sub.tag != "motor":
                raise UnknownTag(f"unsupported element <{sub.tag}> under <actuator>")
            _check_attrs(sub)
            jname = sub.get("joint")
            if jname is None or jname not in joint_names:
                raise InvalidValue(f"motor references unknown joint {jname!r}")
            jindex = joint_names[jname]
            if jindex in seen_joints:
                raise InvalidValue(f"joint {jname!r} has two actuators")
            seen_joints.add(jindex)
            gear = _floats(sub.get("gear", "1"), 1, f"motor {jname} gear")[0]
            if gear <= 0:
                raise InvalidValue(f"motor {jname}: gear must be > 0, got {gear}")
            actuators.append(ActuatorSpec(joint=jindex, gear=gear, name=sub.get("name", jname)))

    model = ArticulatedModel(
        name=name, bodies=tuple(bodies), joints=tuple(joints),
        actuators=tuple(actuators), root_index=0, planar=planar,
    )
    validate_model(model)
    return model


def _parse_geom(elem: ET.Element, bname: str) -> GeomSpec:
    shape = elem.get("type", "sphere")
    if shape not in GEOM_SHAPES:
        raise InvalidValue(f"body {bname}: unknown geom type {shape!r}")
    pos = _floats(elem.get("pos", "0 0 0"), 3, f"geom in {bname} pos")
    quat = _unit_quat(_floats(elem.get("quat", "1 0 0 0"), 4, f"geom in {bname} quat"),
                      f"geom in {bname} quat")
    friction = _floats(elem.get("friction", "1.0"), 1, f"geom in {bname} friction")[0]
    if friction < 0:
        raise InvalidValue(f"geom in {bname}: friction must be >= 0")
    size_n = {"sphere": 1, "capsule": 2, "box": 3, "plane": None}[shape]
    if shape == "plane":
        size: tuple[float, ...] = ()
    else:
        size = _floats(elem.get("size", ""), size_n, f"geom in {bname} size")
        if any(s <= 0 for s in size):
            raise InvalidValue(f"geom in {bname}: size parameters must be > 0")
    return GeomSpec(shape=shape, size=size, local_pos=pos, local_quat=quat,
                    friction=friction, name=elem.get("name", ""))


def _parse_joint(elem: ET.Element, child_body: int, index: int) -> JointSpec:
    jtype = elem.get("type", "hinge")
    if jtype not in JOINT_TYPES:
        raise InvalidValue(f"unknown joint type {jtype!r}")
    jname = elem.get("name", f"joint{index}")
    axis = _unit3(_floats(elem.get("axis", "0 0 1"), 3, f"joint {jname} axis"),
                  f"joint {jname} axis")
    anchor = _floats(elem.get("pos", "0 0 0"), 3, f"joint {jname} pos")
    damping = _floats(elem.get("damping", "0"), 1, f"joint {jname} damping")[0]
    if damping < 0:
        raise InvalidValue(f"joint {jname}: damping must be >= 0")
    if "range" in elem.attrib and "range_rad" in elem.attrib:
        raise InvalidValue(f"joint {jname}: give range or range_rad, not both")
    if "range_rad" in elem.attrib:
        lo, hi = _floats(elem.attrib["range_rad"], 2, f"joint {jname} range_rad")
    else:
        lo, hi = _floats(elem.get("range", "-180 180" if jtype == "hinge" else "-10 10"),
                         2, f"joint {jname} range")
        if jtype == "hinge":
            lo, hi = math.radians(lo), math.radians(hi)
    if not (lo < hi):
        raise InvalidValue(f"joint {jname}: range lo must be < hi, got [{lo}, {hi}]")
    return JointSpec(name=jname, child_body=child_body, type=jtype, axis=axis,
                     range=(lo, hi), damping=damping, anchor=anchor)


def validate_model(model: ArticulatedModel) -> None:
    """Check the tree/actuator invariants; raises on violation."""
    n = len(model.bodies)
    root_seen = False
    for i, body in enumerate(model.bodies):
        if body.parent is None:
            if i != model.root_index:
                raise InvalidValue(f"body {body.name}: parentless body is not the root")
            root_seen = True
        else:
            if not (0 <= body.parent < n):
                raise InvalidValue(f"body {body.name}: parent index out of range")
            if body.parent >= i:
                raise CycleDetected(
                    f"body {body.name}: parent index {body.parent} not before child {i}")
    if not root_seen:
        raise CycleDetected("no root body")
    for joint in model.joints:
        if not (0 <= joint.child_body < n):
            raise InvalidValue(f"joint {joint.name}: child body index out of range")
        if joint.child_body == model.root_index:
            raise InvalidValue(f"joint {joint.name}: root body takes no joint")
    seen = set()
    for act in model.actuators:
        if not (0 <= act.joint < len(model.joints)):
            raise InvalidValue(f"actuator {act.name}: joint index out of range")
        if act.joint in seen:
            raise InvalidValue(f"joint index {act.joint} has two actuators")
        seen.add(act.joint)


def validate_labels(model: ArticulatedModel, required: set[str]) -> None:
    """Raise :class:`MissingLabel` unless every tag labels at least one body."""
    for tag in sorted(required):
        if not any(tag in b.labels for b in model.bodies):
            raise MissingLabel(tag)


# --- multi-axis expansion -----------------------------------------------------

def expand_multi_axis(model: ArticulatedModel) -> ArticulatedModel:
    """Rewrite multi-joint bodies into chains of single-joint bodies.

    A body declaring k > 1 joints gains k-1 synthesized intermediate
    bodies; the first k-1 joints move onto the chain and the body keeps
    the last one.  Actuator count and joint order are preserved.
    Idempotent: a model with at most one joint per body is returned
    unchanged.
    """
    by_body: dict[int, list[int]] = {}
    for j, spec in enumerate(model.joints):
        by_body.setdefault(spec.child_body, []).append(j)
    if all(len(js) <= 1 for js in by_body.values()):
        return model

    new_bodies: list[BodySpec] = []
    new_joints: list[JointSpec | None] = [None] * len(model.joints)
    index_map: dict[int, int] = {}

    for old_index, body in enumerate(model.bodies):
        parent = None if body.parent is None else index_map[body.parent]
        jlist = by_body.get(old_index, [])
        if len(jlist) <= 1:
            index_map[old_index] = len(new_bodies)
            new_bodies.append(replace(body, parent=parent))
            if jlist:
                j = jlist[0]
                new_joints[j] = replace(model.joints[j], child_body=index_map[old_index])
            continue
        # chain: intermediate bodies carry the leading joints at the body's
        # pose, the original body keeps the final joint at identity offset
        for k, j in enumerate(jlist[:-1]):
            inter_index = len(new_bodies)
            new_bodies.append(BodySpec(
                name=f"{body.name}__ax{k}",
                parent=parent,
                local_pos=body.local_pos if k == 0 else (0.0, 0.0, 0.0),
                local_quat=body.local_quat if k == 0 else (1.0, 0.0, 0.0, 0.0),
                mass=SYNTH_MASS,
                inertia=(SYNTH_INERTIA, SYNTH_INERTIA, SYNTH_INERTIA),
                synthetic=True,
            ))
            new_joints[j] = replace(model.joints[j], child_body=inter_index)
            parent = inter_index
        index_map[old_index] = len(new_bodies)
        new_bodies.append(replace(
            body, parent=parent,
            local_pos=(0.0, 0.0, 0.0), local_quat=(1.0, 0.0, 0.0, 0.0),
        ))
        j = jlist[-1]
        new_joints[j] = replace(model.joints[j], child_body=index_map[old_index])

    assert all(j is not None for j in new_joints)
    expanded = ArticulatedModel(
        name=model.name,
        bodies=tuple(new_bodies),
        joints=tuple(new_joints),  # type: ignore[arg-type]
        actuators=model.actuators,
        root_index=index_map[model.root_index],
        planar=model.planar,
    )
    validate_model(expanded)
    return expanded


# --- canonical serialization ---------------------------------------------------

def _fmt(*vals: float) -> str:
    return " ".join(repr(float(v)) for v in vals)


def serialize_model(model: ArticulatedModel) -> str:
    """Emit canonical XML in the same subset; reparsing is bit-exact."""
    lines = [f'<mujoco model="{model.name}" planar="{"true" if model.planar else "false"}">']
    lines.append("  <worldbody>")

    children: dict[int | None, list[int]] = {}
    for i, b in enumerate(model.bodies):
        children.setdefault(b.parent, []).append(i)

    def emit_body(index: int, depth: int) -> None:
        b = model.bodies[index]
        pad = "  " * depth
        attrs = [f'name="{b.name}"', f'pos="{_fmt(*b.local_pos)}"', f'quat="{_fmt(*b.local_quat)}"']
        if b.labels:
            attrs.append(f'labels="{" ".join(sorted(b.labels))}"')
        if b.static:
            attrs.append('static="true"')
        if b.synthetic:
            attrs.append('synthetic="true"')
        if b.collide_group:
            attrs.append(f'collide_group="{b.collide_group}"')
        lines.append(f"{pad}<body {' '.join(attrs)}>")
        lines.append(f'{pad}  <inertial mass="{repr(float(b.mass))}" diaginertia="{_fmt(*b.inertia)}"/>')
        for j, joint in enumerate(model.joints):
            if joint.child_body != index:
                continue
            jattrs = [f'name="{joint.name}"', f'type="{joint.type}"',
                      f'axis="{_fmt(*joint.axis)}"', f'pos="{_fmt(*joint.anchor)}"']
            if joint.type == "hinge":
                jattrs.append(f'range_rad="{_fmt(*joint.range)}"')
            else:
                jattrs.append(f'range="{_fmt(*joint.range)}"')
            jattrs.append(f'damping="{repr(float(joint.damping))}"')
            lines.append(f"{pad}  <joint {' '.join(jattrs)}/>")
        for g in b.geoms:
            gattrs = []
            if g.name:
                gattrs.append(f'name="{g.name}"')
            gattrs.append(f'type="{g.shape}"')
            if g.size:
                gattrs.append(f'size="{_fmt(*g.size)}"')
            gattrs.append(f'pos="{_fmt(*g.local_pos)}"')
            gattrs.append(f'quat="{_fmt(*g.local_quat)}"')
            gattrs.append(f'friction="{repr(float(g.friction))}"')
            lines.append(f"{pad}  <geom {' '.join(gattrs)}/>")
        for c in children.get(index, []):
            emit_body(c, depth + 1)
        lines.append(f"{pad}</body>")

    emit_body(model.root_index, 2)
    lines.append("  </worldbody>")
    if model.actuators:
        lines.append("  <actuator>")
        for act in model.actuators:
            jname = model.joints[act.joint].name
            lines.append(f'    <motor name="{act.name or jname}" joint="{jname}" gear="{repr(float(act.gear))}"/>')
        lines.append("  </actuator>")
    lines.append("</mujoco>")
    return "\n".join(lines) + "\n"
