import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ragmark.envs import (PUBLISHED_ACT_DIMS, make_env, get_effort,
                          joints_at_limit_count, on_terrain_collision, phase_bonus,
                          tilt, uprightness)
from ragmark.envs.instance import EnvInstance
from ragmark.physics.scene import SceneBatch, default_spawn
from ragmark.vec import VecScene

SHEET_OBS_DIMS = {"hopper": 31, "walker2d": 46, "humanoid": 124, "ant": 78}


def _instance(spec, seed=0) -> EnvInstance:
    batch = SceneBatch(spec.cm, spec.physics, 1)
    inst = EnvInstance(spec, batch, 0, np.random.default_rng(seed))
    inst.respawn(default_spawn(spec.cm))
    return inst


class TestDimensions:
    @pytest.mark.parametrize("env_id", list(SHEET_OBS_DIMS))
    def test_act_dims_match_published(self, env_id):
        spec = make_env(env_id)
        assert spec.act_dim == PUBLISHED_ACT_DIMS[env_id]

    @pytest.mark.parametrize("env_id", list(SHEET_OBS_DIMS))
    def test_obs_dims_match_sheet(self, env_id):
        spec = make_env(env_id)
        assert spec.obs_dim == SHEET_OBS_DIMS[env_id]
        assert sum(w for _, w in spec.layout()) == spec.obs_dim

    def test_obs_dim_equals_build_observation_length(self, hopper_spec):
        inst = _instance(hopper_spec)
        assert len(inst.build_observation()) == hopper_spec.obs_dim

    def test_obs_dim_stable_across_episode(self, hopper_spec):
        scene = VecScene(hopper_spec, n=2, seed=0)
        tr = scene.vec_reset(seed=0)
        rng = np.random.default_rng(0)
        for _ in range(50):
            tr = scene.vec_step(rng.uniform(-1, 1, (2, 4)))
            assert tr.obs.shape == (2, hopper_spec.obs_dim)


class TestObservation:
    def test_hopper_rest_height_and_velocities(self, hopper_spec):
        inst = _instance(hopper_spec)
        obs = inst.build_observation()
        assert obs[0] == pytest.approx(1.25)
        # velocity slots: pelvis linvel (2), angvel (1), joint vels (4)
        assert np.allclose(obs[3:6], 0)
        assert np.allclose(obs[10:14], 0)

    def test_joint_at_midpoint_normalizes_to_zero(self, hopper_spec):
        inst = _instance(hopper_spec)
        cm = hopper_spec.cm
        spawn = default_spawn(cm)
        spawn.joint_pos = 0.5 * (cm.jnt_range[:, 0] + cm.jnt_range[:, 1])
        inst.respawn(spawn)
        obs = inst.build_observation()
        jp = obs[6:10]
        assert np.allclose(jp, 0, atol=1e-12)

    def test_foot_contact_flag(self, hopper_spec):
        scene = VecScene(hopper_spec, n=1, seed=0)
        scene.vec_reset(seed=0)
        # fall until the foot touches
        for _ in range(30):
            tr = scene.vec_step(np.zeros((1, 4)))
            if tr.obs[0, -1] == 1.0:
                break
        assert tr.obs[0, -1] == 1.0


class TestReward:
    def test_hopper_standing_reward_is_upright_weight(self, hopper_spec):
        inst = _instance(hopper_spec)
        # exact spawn: v=0, upright=1, zero action, height 1.25 > 1.1
        assert inst.step_reward() == pytest.approx(hopper_spec.reward_weights.w_upright)

    def test_low_height_penalty_applies(self, hopper_spec):
        inst = _instance(hopper_spec)
        assert inst.reward_terms()["height"] == 0.0
        inst.batch.pos[0, :, 1] -= 0.3  # pelvis to 0.95 < 1.1
        assert inst.pelvis_height() == pytest.approx(0.95)
        terms = inst.reward_terms()
        assert terms["height"] == -hopper_spec.reward_weights.low_height_penalty

    def test_ant_all_joints_at_limit(self, ant_spec):
        inst = _instance(ant_spec)
        spawn = default_spawn(ant_spec.cm)
        spawn.joint_pos = ant_spec.cm.jnt_range[:, 1].copy()
        inst.batch.spawn_instance(0, spawn, check=False)
        terms = inst.reward_terms()
        assert terms["joint_limit"] == pytest.approx(-0.2 * 8)

    def test_effort_monotonicity(self, hopper_spec):
        inst = _instance(hopper_spec)
        rng = np.random.default_rng(0)
        base = rng.uniform(-0.5, 0.5, 4)
        inst.last_action = base.copy()
        r0 = inst.step_reward()
        for k in range(4):
            grown = base.copy()
            grown[k] = np.sign(grown[k] or 1.0) * 0.9
            inst.last_action = grown
            assert inst.step_reward() <= r0 + 1e-12


class TestEffort:
    def test_zero(self):
        assert get_effort(np.zeros(4)) == 0.0

    def test_sum_of_squares(self):
        assert get_effort(np.array([1.0, -1.0])) == pytest.approx(2.0)

    def test_ignore_set(self):
        assert get_effort(np.array([1.0, -1.0]), ignore={0}) == pytest.approx(1.0)

    def test_clamped_before_squaring(self):
        assert get_effort(np.array([3.0])) == pytest.approx(1.0)

    @given(st.lists(st.floats(-11, 11, allow_nan=False), min_size=1, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_nonnegative(self, actions):
        assert get_effort(np.array(actions)) >= 0.0


class TestUprightness:
    def test_identity_orientation(self, hopper_spec):
        inst = _instance(hopper_spec)
        assert uprightness(inst, "pelvis") == pytest.approx(1.0)

    def test_rotated_90_about_z(self, hopper_spec):
        inst = _instance(hopper_spec)
        spawn = default_spawn(hopper_spec.cm)
        half = np.pi / 4
        spawn.root_quat = np.array([np.cos(half), 0, 0, np.sin(half)])
        inst.batch.spawn_instance(0, spawn, check=False)
        assert uprightness(inst, "pelvis") == pytest.approx(0.0, abs=1e-12)

    def test_upside_down(self, hopper_spec):
        inst = _instance(hopper_spec)
        spawn = default_spawn(hopper_spec.cm)
        spawn.root_pos = np.array([0.0, 2.5, 0.0])
        spawn.root_quat = np.array([0.0, 0.0, 0.0, 1.0])
        inst.batch.spawn_instance(0, spawn, check=False)
        assert uprightness(inst, "pelvis") == pytest.approx(-1.0)

    @given(st.floats(0, 2 * np.pi, allow_nan=False))
    @settings(max_examples=40, deadline=None)
    def test_tilt_identity(self, hopper_spec, angle):
        inst = _instance(hopper_spec)
        spawn = default_spawn(hopper_spec.cm)
        spawn.root_pos = np.array([0.0, 3.0, 0.0])
        spawn.root_quat = np.array([np.cos(angle / 2), 0, 0, np.sin(angle / 2)])
        inst.batch.spawn_instance(0, spawn, check=False)
        assert tilt(inst, "pelvis") == pytest.approx(1.0 - uprightness(inst, "pelvis"))
        assert -1.0 - 1e-9 <= uprightness(inst, "pelvis") <= 1.0 + 1e-9


class TestJointsAtLimit:
    def test_midpoints_count_zero(self, ant_spec):
        inst = _instance(ant_spec)
        cm = ant_spec.cm
        spawn = default_spawn(cm)
        spawn.joint_pos = 0.5 * (cm.jnt_range[:, 0] + cm.jnt_range[:, 1])
        inst.batch.spawn_instance(0, spawn, check=False)
        assert joints_at_limit_count(inst) == 0

    def test_one_joint_at_hi(self, ant_spec):
        inst = _instance(ant_spec)
        cm = ant_spec.cm
        spawn = default_spawn(cm)
        spawn.joint_pos = 0.5 * (cm.jnt_range[:, 0] + cm.jnt_range[:, 1])
        spawn.joint_pos[0] = cm.jnt_range[0, 1]
        inst.batch.spawn_instance(0, spawn, check=False)
        assert joints_at_limit_count(inst) == 1

    def test_inside_one_percent_band(self, ant_spec):
        inst = _instance(ant_spec)
        cm = ant_spec.cm
        spawn = default_spawn(cm)
        spawn.joint_pos = 0.5 * (cm.jnt_range[:, 0] + cm.jnt_range[:, 1])
        width = cm.jnt_range[0, 1] - cm.jnt_range[0, 0]
        spawn.joint_pos[0] = cm.jnt_range[0, 1] - 0.005 * width  # hi - 0.5% width
        inst.batch.spawn_instance(0, spawn, check=False)
        assert joints_at_limit_count(inst) == 1


class TestPhase:
    def test_feet_level_gives_zero(self, humanoid_spec):
        inst = _instance(humanoid_spec)
        inst.phase_clock = 0.25  # sin = 1
        lf = humanoid_spec.model.labeled("left_foot")[0]
        rf = humanoid_spec.model.labeled("right_foot")[0]
        inst.batch.pos[0, lf, 0] = inst.batch.pos[0, rf, 0]
        assert phase_bonus(inst) == 0.0

    def test_quarter_phase_left_leading(self, humanoid_spec):
        inst = _instance(humanoid_spec)
        inst.phase_clock = 0.25
        lf = humanoid_spec.model.labeled("left_foot")[0]
        inst.batch.pos[0, lf, 0] += 0.1
        assert phase_bonus(inst) == pytest.approx(1.0)

    def test_three_quarter_phase_left_leading(self, humanoid_spec):
        inst = _instance(humanoid_spec)
        inst.phase_clock = 0.75
        lf = humanoid_spec.model.labeled("left_foot")[0]
        inst.batch.pos[0, lf, 0] += 0.1
        assert phase_bonus(inst) == pytest.approx(-1.0)


class TestTermination:
    def test_hopper_low_height(self, hopper_spec):
        inst = _instance(hopper_spec)
        spawn = default_spawn(hopper_spec.cm)
        spawn.root_pos = np.array([0.0, 0.25 + 1.0, 0.0])
        spawn.joint_pos = np.zeros(4)
        inst.batch.spawn_instance(0, spawn, check=False)
        inst.batch.pos[0, :, 1] -= 1.0  # shift whole body down
        assert inst.pelvis_height() < 0.3
        assert inst.terminate_check() == "terminated"
        assert inst.last_termination == "low_height"

    def test_walker_non_foot_contact(self, walker_spec):
        scene = VecScene(walker_spec, n=1, seed=0)
        scene.vec_reset(seed=0)
        # strong asymmetric torques topple it onto non-foot parts
        rng = np.random.default_rng(4)
        for _ in range(600):
            tr = scene.vec_step(rng.uniform(0.4, 1.0, (1, 6)))
            if tr.status[0] == "terminated":
                break
        log = scene.drain_episode_log()
        assert any("non_foot_contact" in rec[4] for rec in log)

    def test_upright_ant_continues(self, ant_spec):
        inst = _instance(ant_spec)
        assert tilt(inst, "torso") < 0.05
        assert inst.terminate_check() == "running"

    def test_head_tilt_triggers(self, hopper_spec):
        inst = _instance(hopper_spec)
        spawn = default_spawn(hopper_spec.cm)
        spawn.root_pos = np.array([0.0, 2.0, 0.0])
        angle = 1.1  # tilt = 1 - cos(1.1) = 0.55 > 0.4
        spawn.root_quat = np.array([np.cos(angle / 2), 0, 0, np.sin(angle / 2)])
        inst.batch.spawn_instance(0, spawn, check=False)
        assert inst.terminate_check() == "terminated"
        assert inst.last_termination == "head_tilt"

    def test_episode_cap_truncates(self, hopper_spec):
        inst = _instance(hopper_spec)
        inst.decision_step = hopper_spec.episode_cap
        assert inst.terminate_check() == "truncated"

    def test_height_rule_monotone(self, hopper_spec):
        # if terminated at height h, terminated at every h' < h
        inst = _instance(hopper_spec)
        tp = hopper_spec.termination_params
        for h in (0.29, 0.2, 0.1, 0.02):
            spawn = default_spawn(hopper_spec.cm)
            inst.batch.spawn_instance(0, spawn, check=False)
            inst.batch.pos[0, :, 1] += h - inst.pelvis_height()
            assert inst.pelvis_height() == pytest.approx(h)
            assert (inst.terminate_check() == "terminated") == (h < tp.min_height)


class TestOnTerrainCollision:
    def test_foot_only(self, hopper_spec):
        scene = VecScene(hopper_spec, n=1, seed=0)
        scene.vec_reset(seed=0)
        for _ in range(30):
            scene.vec_step(np.zeros((1, 4)))
        contacts = scene.batch.contact_set(0)
        assert contacts, "foot should touch after settling"
        kind, body = on_terrain_collision(contacts, hopper_spec.model)
        assert kind == "foot_only"

    def test_empty_contact_set_is_foot_only(self, hopper_spec):
        kind, body = on_terrain_collision((), hopper_spec.model)
        assert kind == "foot_only" and body is None

    def test_non_foot_body_reported(self, hopper_spec):
        from ragmark.physics.scene import ContactPoint
        head = hopper_spec.model.labeled("head")[0]
        contacts = (ContactPoint(body=head, geom=0, point=np.zeros(3),
                                 normal=np.array([0, 1, 0.0]), depth=0.01),)
        kind, body = on_terrain_collision(contacts, hopper_spec.model)
        assert kind == "non_foot" and body == head


class TestResetDeterminism:
    def test_same_seed_same_observation(self, hopper_spec):
        a = _instance(hopper_spec, seed=5).agent_reset(np.random.default_rng(11))
        b = _instance(hopper_spec, seed=6).agent_reset(np.random.default_rng(11))
        assert np.array_equal(a, b)

    def test_reset_zeroes_return(self, hopper_spec):
        inst = _instance(hopper_spec)
        inst.episode_return = 12.5
        inst.agent_reset()
        assert inst.episode_return == 0.0
        assert inst.decision_step == 0
