import numpy as np
import pytest

from ragmark.envs import make_env
from ragmark.errors import DimensionMismatch, EmptyMotion, InvalidValue
from ragmark.physics.terrain import Terrain
from ragmark.tasks import (ControllerGoal, TerrainAdversary, TerrainChallenge,
                           controller_observation, generate_terrain,
                           height_observation, imitation_reward,
                           imitation_terminate, parse_motion_text,
                           pendulum_swing_motion, propose_challenge,
                           sample_goal, sample_reference, serialize_motion,
                           walker_gait_motion)
from ragmark.tasks.controller import RESAMPLE_HI, RESAMPLE_LO, V_MAX, tracking_term
from ragmark.tasks.imitation import MotionFrame, ReferenceMotion, pose_distance
from ragmark.vec import VecScene


class TestGoalSampler:
    def test_discrete_distribution_100k(self):
        rng = np.random.default_rng(0)
        counts = {"left": 0, "right": 0, "stationary": 0}
        jumps = 0
        n = 100_000
        for _ in range(n):
            g = sample_goal("discrete", rng)
            base = g.discrete_goal.removeprefix("jump_")
            if base == "jump":
                base = "stationary"
            counts[base] += 1
            jumps += g.discrete_goal.startswith("jump")
        assert abs(counts["left"] / n - 0.40) <= 0.01
        assert abs(counts["right"] / n - 0.40) <= 0.01
        assert abs(counts["stationary"] / n - 0.20) <= 0.01
        assert abs(jumps / n - 0.25) <= 0.01

    def test_resample_horizon_range(self):
        rng = np.random.default_rng(1)
        for _ in range(2000):
            g = sample_goal("discrete", rng)
            assert RESAMPLE_LO <= g.steps_until_resample <= RESAMPLE_HI

    def test_continuous_target_in_unit_interval(self):
        rng = np.random.default_rng(2)
        vals = [sample_goal("continuous", rng).target_velocity for _ in range(5000)]
        assert all(-1.0 <= v <= 1.0 for v in vals)
        assert np.std(vals) > 0.4  # roughly uniform, not clustered


class TestControllerReward:
    def test_exact_tracking_maximal(self):
        w = 1.0
        assert tracking_term(2.0, 1.0, w) == pytest.approx(w)
        assert tracking_term(-2.0, -1.0, w) == pytest.approx(w)

    def test_stationary_at_rest_maximal(self):
        assert tracking_term(0.0, 0.0, 1.0) == pytest.approx(1.0)

    def test_opposite_direction_penalty(self):
        # goal left (v* = -1), moving right at +2: (2 - |2+2|)/2 = -1
        assert tracking_term(2.0, -1.0, 1.0) == pytest.approx(-1.0)


class TestControllerObservation:
    def test_continuous_appends_target(self):
        base = np.zeros(31)
        g = ControllerGoal(mode="continuous", target_velocity=0.5)
        out = controller_observation(base, g)
        assert len(out) == 32
        assert out[-1] == 0.5

    def test_discrete_one_hot(self):
        base = np.zeros(31)
        g = ControllerGoal(mode="discrete", discrete_goal="right")
        out = controller_observation(base, g)
        assert len(out) == 37
        hot = out[31:]
        assert hot.sum() == 1.0 and hot[1] == 1.0  # right is index 1

    def test_wrapped_scene_obs_dim(self, hopper_spec):
        scene = VecScene(hopper_spec, n=2, seed=0, wrapper=["controller:discrete"])
        assert scene.obs_dim == 31 + 6
        tr = scene.vec_reset(seed=0)
        assert tr.obs.shape == (2, 37)


class TestReferenceMotion:
    def _motion(self):
        frames = (
            MotionFrame(0.0, np.array([0.0, 1.0]), (0.0, 0.0, 0.0)),
            MotionFrame(1.0, np.array([2.0, 3.0]), (1.0, 0.0, 0.0)),
            MotionFrame(2.0, np.array([0.0, 1.0]), (2.0, 0.0, 0.0)),
        )
        return ReferenceMotion("tri", frames, loop=True)

    def test_exact_frame_time(self):
        joints, root = sample_reference(self._motion(), 1.0)
        assert np.allclose(joints, [2.0, 3.0])
        assert root[0] == 1.0

    def test_midpoint_interpolation(self):
        joints, _ = sample_reference(self._motion(), 0.5)
        assert np.allclose(joints, [1.0, 2.0])

    def test_loop_wraps(self):
        m = self._motion()
        a, _ = sample_reference(m, 2.1)
        b, _ = sample_reference(m, 0.1)
        assert np.allclose(a, b)

    def test_clamp_when_not_looping(self):
        m = ReferenceMotion("c", self._motion().frames, loop=False)
        a, _ = sample_reference(m, 99.0)
        assert np.allclose(a, [0.0, 1.0])

    def test_wrap_continuity(self):
        m = pendulum_swing_motion()
        eps = 1e-4
        before, _ = sample_reference(m, m.duration - eps)
        after, _ = sample_reference(m, m.duration + eps)
        assert np.allclose(before, after, atol=1e-2)

    def test_strictly_increasing_times_required(self):
        frames = (MotionFrame(0.0, np.array([0.0]), (0, 0, 0)),
                  MotionFrame(0.0, np.array([1.0]), (0, 0, 0)))
        with pytest.raises(InvalidValue):
            ReferenceMotion("bad", frames)

    def test_empty_rejected(self):
        with pytest.raises(EmptyMotion):
            ReferenceMotion("empty", ())

    def test_file_round_trip(self, tmp_path):
        m = walker_gait_motion()
        text = serialize_motion(m)
        again = parse_motion_text(text)
        assert again.name == m.name
        assert again.loop == m.loop
        assert len(again.frames) == len(m.frames)
        for a, b in zip(m.frames, again.frames):
            assert a.t == b.t
            assert np.array_equal(a.joints, b.joints)
            assert a.root == b.root


class TestImitationReward:
    def _inst(self, spec):
        scene = VecScene(spec, n=1, seed=0, wrapper=["imitation:pendulum"])
        scene.vec_reset(seed=0)
        return scene.instances[0]

    def test_perfect_match_is_one(self):
        spec = make_env("pendulum")
        inst = self._inst(spec)
        m = pendulum_swing_motion()
        ref, _ = sample_reference(m, 0.3)
        inst.batch.jpos[0] = ref
        assert imitation_reward(inst, m, 0.3) == pytest.approx(1.0)

    def test_half_distance_hand_value(self):
        # squared error 0.5 with k_p = 2 gives e^-1
        spec = make_env("pendulum")
        inst = self._inst(spec)
        m = pendulum_swing_motion()
        ref, _ = sample_reference(m, 0.0)
        inst.batch.jpos[0] = ref + np.sqrt(0.5)
        assert imitation_reward(inst, m, 0.0) == pytest.approx(np.exp(-1.0))

    def test_strictly_decreasing_in_error(self):
        spec = make_env("pendulum")
        inst = self._inst(spec)
        m = pendulum_swing_motion()
        ref, _ = sample_reference(m, 0.0)
        last = 2.0
        for err in (0.0, 0.1, 0.3, 0.7, 1.2):
            inst.batch.jpos[0] = ref + err
            r = imitation_reward(inst, m, 0.0)
            assert 0.0 < r <= 1.0
            assert r < last or err == 0.0
            last = r

    def test_terminate_threshold(self):
        spec = make_env("pendulum")
        inst = self._inst(spec)
        m = pendulum_swing_motion()
        ref, _ = sample_reference(m, 0.0)
        inst.batch.jpos[0] = ref
        assert not imitation_terminate(inst, m, 0.0, d_max=1.5)
        inst.batch.jpos[0] = ref + np.sqrt(1.5) + 1e-6
        assert imitation_terminate(inst, m, 0.0, d_max=1.5)
        assert not imitation_terminate(inst, m, 0.0, d_max=np.inf)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            pose_distance(np.zeros(3), np.zeros(2))


class TestTerrainGeneration:
    def test_difficulty_zero_is_flat(self):
        ch = TerrainChallenge(difficulty=0.0)
        t = generate_terrain(ch, np.random.default_rng(0))
        assert np.all(t.heights == 0.0)

    def test_max_bump_height_scan(self):
        ch = TerrainChallenge(difficulty=1.0, difficulty_cap=1.0, bump_height=0.3,
                              gap_width=0.0, slope=0.0)
        best = 0.0
        for seed in range(5):
            t = generate_terrain(ch, np.random.default_rng(seed))
            best = max(best, float(t.heights.max()))
        assert best >= 0.3 * (1 - 0.5)  # generator jitters bump height >= 50%

    def test_same_seed_identical(self):
        ch = TerrainChallenge(difficulty=0.7)
        a = generate_terrain(ch, np.random.default_rng(9))
        b = generate_terrain(ch, np.random.default_rng(9))
        assert np.array_equal(a.heights, b.heights)

    def test_spawn_apron_flat(self):
        ch = TerrainChallenge(difficulty=1.0, difficulty_cap=1.0)
        t = generate_terrain(ch, np.random.default_rng(3))
        xs = np.arange(len(t.heights)) * t.spacing
        assert np.all(t.heights[xs <= 2.0] == 0.0)


class TestHeightObservation:
    def test_flat_zeros(self):
        out = height_observation(Terrain(), 1.0, 10, 0.2)
        assert out.shape == (10,)
        assert np.all(out == 0.0)

    def test_k_zero_empty(self):
        assert height_observation(Terrain(), 0.0, 0, 0.2).shape == (0,)

    def test_step_ahead(self):
        h = np.zeros(100)
        h[50:] = 0.5
        t = Terrain(kind="heightfield", heights=h, spacing=0.1)
        out = height_observation(t, 4.85, 3, 0.2)
        assert out[0] == pytest.approx(0.5)

    def test_wrapped_scene_extends_obs(self, walker_spec):
        scene = VecScene(walker_spec, n=2, seed=0, wrapper=["terrain:0.5"])
        assert scene.obs_dim == walker_spec.obs_dim + 10
        tr = scene.vec_reset(seed=0)
        assert tr.obs.shape == (2, walker_spec.obs_dim + 10)


class TestAdversary:
    def test_accept_iff_reward_drops(self):
        adv = TerrainAdversary(TerrainChallenge(difficulty=0.3), seed=0)
        p1 = adv.propose()
        assert adv.observe(p1, 10.0)      # first measurement always accepted
        p2 = adv.propose()
        assert not adv.observe(p2, 12.0)  # higher reward rejected
        assert adv.current_reward == 10.0
        p3 = adv.propose()
        assert adv.observe(p3, 8.0)       # lower accepted
        assert adv.current is p3

    def test_difficulty_never_exceeds_cap(self):
        ch = TerrainChallenge(difficulty=0.75, difficulty_cap=0.8)
        rng = np.random.default_rng(0)
        for _ in range(500):
            ch = propose_challenge(ch, rng)
            assert ch.difficulty <= 0.8

    def test_params_stay_in_bounds(self):
        ch = TerrainChallenge()
        rng = np.random.default_rng(1)
        for _ in range(300):
            ch = propose_challenge(ch, rng)
            for key, (lo, hi) in ch.bounds.items():
                assert lo <= getattr(ch, key) <= hi


class TestTerrainConfigKeys:
    def test_challenge_from_run_config_mapping(self):
        from ragmark.tasks.terrain_gen import challenge_from_mapping
        ch = challenge_from_mapping({
            "bump_height_max": 0.25, "gap_width_max": 0.6, "slope_max": 0.1,
            "height_obs_count": 6, "height_obs_spacing": 0.25,
            "difficulty": 0.4,
        })
        assert ch.bounds["bump_height"] == (0.0, 0.25)
        assert ch.bounds["gap_width"] == (0.0, 0.6)
        assert ch.bump_height == 0.25
        assert ch.height_obs_count == 6
        assert ch.height_obs_spacing == 0.25
        assert ch.difficulty == 0.4

    def test_trainer_config_ignores_terrain_keys_silently(self, caplog):
        import logging
        from ragmark.ppo.config import config_from_mapping
        with caplog.at_level(logging.WARNING):
            config_from_mapping({"batch_size": 512, "buffer_size": 1024,
                                 "bump_height_max": 0.3})
        assert not any("bump_height_max" in r.message for r in caplog.records)

    def test_wrapper_stack_receives_config(self, walker_spec):
        from ragmark.tasks.base import make_wrapper_stack
        from ragmark.tasks.terrain_gen import TerrainTaskWrapper
        stack = make_wrapper_stack(["terrain"], walker_spec,
                                   {"height_obs_count": 4})
        wrapper = stack.find(TerrainTaskWrapper)
        assert wrapper.challenge.height_obs_count == 4
        assert stack.obs_extension_dim() == 4
