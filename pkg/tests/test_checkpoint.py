import numpy as np
import pytest
import torch

from ragmark.errors import CheckpointError, ConfigError
from ragmark.ppo import (PolicyParams, TrainerConfig, evaluate, load_checkpoint,
                         save_checkpoint, train)
from ragmark.ppo.checkpoint import MAGIC
from ragmark.vec import VecScene


def _trained_params(spec, steps=64):
    config = TrainerConfig(max_steps=steps, buffer_size=128, batch_size=64,
                           time_horizon=16, hidden_units=16, seed=0)
    scene = VecScene(spec, n=4, seed=0)
    return train(scene, config)


class TestRoundTrip:
    def test_bitwise_identical_evaluation(self, hopper_spec, tmp_path):
        params = _trained_params(hopper_spec)
        path = tmp_path / "ckpt.rgmk"
        save_checkpoint(params, path)
        loaded = load_checkpoint(path)

        def report(p):
            scene = VecScene(hopper_spec, n=2, seed=5)
            return evaluate(p, scene, episodes=4, seed=5)

        a = report(params)
        b = report(loaded)
        assert a == b  # bitwise equality of mean return/length/distance

    def test_normalizer_state_preserved(self, hopper_spec, tmp_path):
        params = _trained_params(hopper_spec)
        assert params.normalizer.count > 0
        path = tmp_path / "ckpt.rgmk"
        save_checkpoint(params, path)
        loaded = load_checkpoint(path)
        assert loaded.normalizer.count == params.normalizer.count
        assert np.array_equal(loaded.normalizer.mean, params.normalizer.mean)
        assert np.array_equal(loaded.normalizer.m2, params.normalizer.m2)

    def test_weights_preserved_exactly(self, hopper_spec, tmp_path):
        params = _trained_params(hopper_spec)
        path = tmp_path / "ckpt.rgmk"
        save_checkpoint(params, path)
        loaded = load_checkpoint(path)
        for a, b in zip(params.net.parameters(), loaded.net.parameters()):
            assert torch.equal(a, b)

    def test_config_echo_survives(self, hopper_spec, tmp_path):
        params = _trained_params(hopper_spec)
        path = tmp_path / "ckpt.rgmk"
        save_checkpoint(params, path)
        loaded = load_checkpoint(path)
        assert loaded.config == params.config
        assert loaded.env_id == "hopper"


class TestFormat:
    def test_magic_bytes(self, hopper_spec, tmp_path):
        params = PolicyParams.fresh("hopper", 31, 4, TrainerConfig(hidden_units=8))
        path = tmp_path / "c.rgmk"
        save_checkpoint(params, path)
        assert path.read_bytes()[:5] == MAGIC == b"RGMK1"

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "junk.rgmk"
        path.write_bytes(b"NOTRGMK" + b"\x00" * 64)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError) as exc:
            load_checkpoint(tmp_path / "missing.rgmk")
        assert "No such file" in str(exc.value)

    def test_truncated_arrays(self, hopper_spec, tmp_path):
        params = PolicyParams.fresh("hopper", 31, 4, TrainerConfig(hidden_units=8))
        path = tmp_path / "c.rgmk"
        save_checkpoint(params, path)
        raw = path.read_bytes()
        path.write_bytes(raw[:len(raw) - 100])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_wrappers_recorded(self, hopper_spec, tmp_path):
        params = PolicyParams.fresh("hopper", 37, 4, TrainerConfig(hidden_units=8))
        params.wrappers = ["controller:discrete"]
        path = tmp_path / "c.rgmk"
        save_checkpoint(params, path)
        assert load_checkpoint(path).wrappers == ["controller:discrete"]
