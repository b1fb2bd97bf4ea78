from .buffer import RolloutBuffer
from .checkpoint import PolicyParams, load_checkpoint, save_checkpoint
from .config import TrainerConfig, config_from_mapping, load_trainer_config
from .gae import compute_gae, standardize
from .nets import PolicyValueNet
from .normalizer import IdentityNormalizer, RunningNormalizer
from .trainer import EvalReport, MetricSink, UpdateStats, evaluate, ppo_update, train

__all__ = [
    "RolloutBuffer", "PolicyParams", "load_checkpoint", "save_checkpoint",
    "TrainerConfig", "config_from_mapping", "load_trainer_config", "compute_gae",
    "standardize", "PolicyValueNet", "IdentityNormalizer", "RunningNormalizer",
    "EvalReport", "MetricSink", "UpdateStats", "evaluate", "ppo_update", "train",
]
