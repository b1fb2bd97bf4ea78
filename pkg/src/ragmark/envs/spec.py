"""Environment definitions: reward weights, termination rules, layouts.

The observation layout is fixed per environment and documented in
``docs/envs/``; ``EnvSpec`` construction asserts the computed dimension
against the shipped sheet values (the sheets are the normative dims
contract).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..assets import load_asset
from ..errors import ConfigError, InvalidValue
from ..mjcf import ArticulatedModel, expand_multi_axis, validate_labels
from ..physics import CompiledModel, PhysicsConfig, compile_model


@dataclass(frozen=True)
class RewardWeights:
    w_velocity: float = 1.0
    w_upright: float = 0.1
    w_effort: float = 0.1
    low_height_penalty: float = 1.0
    height_threshold: float = 1.1
    w_joint_limit: float = 0.2
    w_phase: float = 0.1

    def __post_init__(self) -> None:
        for name in ("w_velocity", "w_upright", "w_effort", "low_height_penalty",
                     "height_threshold", "w_joint_limit", "w_phase"):
            if getattr(self, name) < 0:
                raise InvalidValue(f"{name} must be >= 0")


@dataclass(frozen=True)
class TerminationParams:
    min_height: float | None = None
    max_head_tilt: float | None = None
    max_body_tilt: float | None = None
    non_foot_contact_terminates: bool = False


# reward terms an environment sums; see step_reward
TERMS_PLANAR = frozenset({"velocity", "upright", "effort", "height"})


@dataclass(frozen=True)
class EnvSpec:
    env_id: str
    model: ArticulatedModel           # expanded, single-axis form
    cm: CompiledModel = field(repr=False)
    obs_dim: int
    act_dim: int
    planar: bool
    reward_weights: RewardWeights
    reward_terms: frozenset[str]
    termination_params: TerminationParams
    physics: PhysicsConfig
    episode_cap: int = 1000
    reset_noise: float = 0.005
    phase_period: float = 1.0

    @property
    def n_joints(self) -> int:
        return len(self.model.joints)

    @property
    def n_feet(self) -> int:
        return len(self.cm.foot_bodies)

    def layout(self) -> list[tuple[str, int]]:
        """Ordered (block name, width) pairs; widths sum to obs_dim."""
        u = 2 if self.planar else 3
        a = 1 if self.planar else 3
        blocks = [
            ("pelvis_height", 1),
            ("pelvis_up", u),
            ("pelvis_linvel", u),
            ("pelvis_angvel", a),
            ("joint_pos_normalized", self.n_joints),
            ("joint_vel_scaled", self.n_joints),
            ("body_rel_pos_vel", len(self.cm.observed_bodies) * 2 * u),
            ("foot_contact_flags", self.n_feet),
        ]
        if "phase" in self.reward_terms:
            blocks.append(("phase_sin_cos", 2))
        return blocks


def _computed_obs_dim(spec_like) -> int:
    return sum(w for _, w in spec_like.layout())


@dataclass(frozen=True)
class _EnvDef:
    required_labels: frozenset[str]
    planar: bool
    dt: float
    reward_terms: frozenset[str]
    weights: RewardWeights
    termination: TerminationParams


_DEFS: dict[str, _EnvDef] = {
    "hopper": _EnvDef(
        required_labels=frozenset({"pelvis", "foot", "head"}),
        planar=True, dt=1.0 / 250.0,
        reward_terms=TERMS_PLANAR,
        weights=RewardWeights(height_threshold=1.1),
        termination=TerminationParams(min_height=0.3, max_head_tilt=0.4,
                                      non_foot_contact_terminates=True),
    ),
    "walker2d": _EnvDef(
        required_labels=frozenset({"pelvis", "foot"}),
        planar=True, dt=1.0 / 250.0,
        reward_terms=TERMS_PLANAR,
        weights=RewardWeights(height_threshold=1.1),
        termination=TerminationParams(non_foot_contact_terminates=True),
    ),
    "humanoid": _EnvDef(
        required_labels=frozenset({"pelvis", "foot", "left_foot", "right_foot"}),
        planar=False, dt=1.0 / 500.0,
        reward_terms=TERMS_PLANAR | {"phase"},
        weights=RewardWeights(height_threshold=1.2),
        termination=TerminationParams(non_foot_contact_terminates=True),
    ),
    "ant": _EnvDef(
        required_labels=frozenset({"pelvis", "torso", "foot"}),
        planar=False, dt=1.0 / 500.0,
        reward_terms=frozenset({"velocity", "effort", "joint_limit"}),
        weights=RewardWeights(),
        termination=TerminationParams(max_body_tilt=0.2),
    ),
    # diagnostic rigs for trainer and imitation tests
    "slider": _EnvDef(
        required_labels=frozenset({"pelvis"}),
        planar=True, dt=1.0 / 250.0,
        reward_terms=frozenset({"velocity", "effort"}),
        weights=RewardWeights(),
        termination=TerminationParams(),
    ),
    "pendulum": _EnvDef(
        required_labels=frozenset({"pelvis"}),
        planar=True, dt=1.0 / 250.0,
        reward_terms=frozenset({"effort"}),
        weights=RewardWeights(),
        termination=TerminationParams(),
    ),
}

ENV_IDS = ("hopper", "walker2d", "humanoid", "ant")
AUX_ENV_IDS = ("slider", "pendulum")

# published action/observation counts; hopper is exact in both sources,
# the other text/table observation values disagree and are recorded in
# the docs/envs sheets next to the shipped dims
PUBLISHED_ACT_DIMS = {"hopper": 4, "walker2d": 6, "humanoid": 21, "ant": 8}


def make_env(env_id: str, physics: PhysicsConfig | None = None,
             episode_cap: int = 1000,
             reward_weights: RewardWeights | None = None) -> EnvSpec:
    """Build the EnvSpec for a shipped environment.

    ``reward_weights`` overrides the table defaults; overridden runs
    record the weights in their manifest."""
    if env_id not in _DEFS:
        raise ConfigError(f"unknown environment {env_id!r}; "
                          f"choose from {ENV_IDS + AUX_ENV_IDS}")
    d = _DEFS[env_id]
    raw = load_asset(env_id)
    model = expand_multi_axis(raw)
    validate_labels(model, set(d.required_labels))
    cm = compile_model(model)
    act_dim = model.act_dim
    if act_dim != len(model.joints):
        raise InvalidValue(f"{env_id}: every joint must be actuated "
                           f"({act_dim} actuators, {len(model.joints)} joints)")
    cfg = physics or PhysicsConfig(dt=d.dt)
    spec = EnvSpec(
        env_id=env_id, model=model, cm=cm,
        obs_dim=0,  # placeholder, replaced below
        act_dim=act_dim, planar=d.planar,
        reward_weights=reward_weights or d.weights, reward_terms=d.reward_terms,
        termination_params=d.termination, physics=cfg, episode_cap=episode_cap,
    )
    object.__setattr__(spec, "obs_dim", _computed_obs_dim(spec))
    if env_id in PUBLISHED_ACT_DIMS and act_dim != PUBLISHED_ACT_DIMS[env_id]:
        raise InvalidValue(f"{env_id}: act_dim {act_dim} != published "
                           f"{PUBLISHED_ACT_DIMS[env_id]}")
    return spec
