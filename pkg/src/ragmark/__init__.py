"""ragmark: an active-ragdoll continuous-control benchmark suite.

Articulated rigid-body physics, four locomotion environments, a
vectorized multi-agent scene, a PPO trainer, task wrappers (player
controllers, motion imitation, adversarial terrain), a newline-delimited
JSON wire protocol for external trainers, and a browser UI bridge.
"""

__version__ = "0.1.0"

from . import envs, mjcf, physics, ppo, tasks
from .vec import BatchTransition, BenchReport, VecScene, bench_throughput

__all__ = ["envs", "mjcf", "physics", "ppo", "tasks", "BatchTransition",
           "BenchReport", "VecScene", "bench_throughput", "__version__"]
