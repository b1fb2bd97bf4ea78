"""Trainer hyperparameters and the run-config file format.

Config files are YAML with one section per environment, each section a
flat name: value mapping using the published key names (batch_size,
buffer_size, time_horizon, ...).  The legacy brain section names map
onto environment ids.  ``use_curiosity: true`` is parsed and rejected:
the curiosity module is unsupported.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from ..errors import ConfigError

log = logging.getLogger(__name__)

SECTION_ALIASES = {
    "DeepMindHopperBrain": "hopper",
    "DeepMindWalkerBrain": "walker2d",
    "DeepMindHumanoidBrain": "humanoid",
    "OpenAIAntBrain": "ant",
}

# keys accepted but carrying no behavior of their own
_IGNORED_KEYS = {"curiosity_strength", "curiosity_enc_size"}


@dataclass(frozen=True)
class TrainerConfig:
    normalize: bool = True
    num_epoch: int = 3
    beta: float = 1.0e-2          # entropy coefficient
    epsilon: float = 0.20         # surrogate clip
    gamma: float = 0.99
    lam: float = 0.95             # file key: lambda
    learning_rate: float = 1.0e-3
    time_horizon: int = 128
    batch_size: int = 2048
    buffer_size: int = 10240
    max_steps: int = 300_000      # per-agent decision steps
    summary_freq: int = 1000      # per-agent steps between metric rows
    num_layers: int = 2
    hidden_units: int = 128
    value_loss_coef: float = 0.5
    grad_clip_norm: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigError(f"gamma must be in (0, 1], got {self.gamma}")
        if not (0.0 <= self.lam <= 1.0):
            raise ConfigError(f"lambda must be in [0, 1], got {self.lam}")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be > 0")
        if self.time_horizon < 1:
            raise ConfigError("time_horizon must be >= 1")
        if self.buffer_size % self.batch_size != 0:
            raise ConfigError(
                f"buffer_size {self.buffer_size} must be a multiple of "
                f"batch_size {self.batch_size}")
        if self.num_layers < 1 or self.hidden_units < 1:
            raise ConfigError("network needs at least one layer and one unit")
        if self.max_steps < 0:
            raise ConfigError("max_steps must be >= 0")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["lambda"] = d.pop("lam")
        return d


_KEY_TO_FIELD = {
    "lambda": "lam",
    **{f.name: f.name for f in fields(TrainerConfig)},
}

_INT_FIELDS = {"num_epoch", "time_horizon", "batch_size", "buffer_size",
               "max_steps", "summary_freq", "num_layers", "hidden_units", "seed"}


def config_from_mapping(mapping: dict, source: str = "<config>") -> TrainerConfig:
    kwargs: dict = {}
    for key, value in mapping.items():
        if key == "use_curiosity":
            if _as_bool(value, key):
                raise ConfigError(
                    "use_curiosity is unsupported: the curiosity module is not "
                    "implemented; remove the flag or set it to false")
            continue
        if key == "use_recurrent":
            if _as_bool(value, key):
                raise ConfigError("use_recurrent is unsupported; only "
                                  "feed-forward policies are implemented")
            continue
        if key in _IGNORED_KEYS:
            log.warning("%s: key %r has no effect without use_curiosity", source, key)
            continue
        if key in _terrain_keys():
            continue  # consumed by the terrain wrapper, not the trainer
        if key not in _KEY_TO_FIELD:
            log.warning("%s: unknown key %r ignored", source, key)
            continue
        name = _KEY_TO_FIELD[key]
        if name == "normalize":
            kwargs[name] = _as_bool(value, key)
        elif name in _INT_FIELDS:
            kwargs[name] = int(float(value))
        else:
            kwargs[name] = float(value)
    return TrainerConfig(**kwargs)


def _terrain_keys() -> frozenset:
    from ..tasks.terrain_gen import TERRAIN_CONFIG_KEYS
    return TERRAIN_CONFIG_KEYS


def _as_bool(value, key: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "false"):
        return value.lower() == "true"
    raise ConfigError(f"{key}: expected boolean, got {value!r}")


def load_run_section(path: str | Path, env_id: str) -> dict:
    """Raw mapping for env_id (trainer keys plus wrapper keys such as the
    terrain challenge parameters)."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    sections = {SECTION_ALIASES.get(k, k): v for k, v in data.items()
                if isinstance(v, dict)}
    if env_id in sections:
        return sections[env_id]
    flat = {k: v for k, v in data.items() if not isinstance(v, dict)}
    if not sections and flat:
        return flat
    if len(sections) == 1 and not flat:
        return next(iter(sections.values()))
    raise ConfigError(f"config {path} has no section for environment {env_id!r}")


def load_trainer_config(path: str | Path, env_id: str) -> TrainerConfig:
    """Pick the section for env_id out of a run-config file."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")

    sections: dict[str, dict] = {}
    flat: dict = {}
    for key, value in data.items():
        if isinstance(value, dict):
            sections[SECTION_ALIASES.get(key, key)] = value
        else:
            flat[key] = value
    if env_id in sections:
        return config_from_mapping(sections[env_id], source=f"{path}:{env_id}")
    if not sections and flat:
        return config_from_mapping(flat, source=str(path))
    if len(sections) == 1 and not flat:
        only = next(iter(sections))
        log.warning("%s: no section for %r, using the only section %r",
                    path, env_id, only)
        return config_from_mapping(sections[only], source=f"{path}:{only}")
    raise ConfigError(f"config {path} has no section for environment {env_id!r}")
