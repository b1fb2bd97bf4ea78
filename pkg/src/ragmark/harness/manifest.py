"""Run manifests and the metric/checkpoint sink.

A run directory holds manifest.json (full config echo, asset hashes,
seed, dimension table, results), metrics.csv and RGMK1 checkpoints; the
manifest alone is enough to reproduce the run.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import platform
import time
from pathlib import Path

from .. import __version__
from ..assets import asset_sha256
from ..envs.spec import EnvSpec
from ..errors import RagmarkError
from ..ppo.checkpoint import PolicyParams, save_checkpoint
from ..ppo.config import TrainerConfig

METRICS_HEADER = ["step", "mean_return", "mean_length", "steps_per_sec"]


class IoError(RagmarkError):
    code = "io_error"


def save_run_metadata(run_dir: str | Path, config: TrainerConfig, spec: EnvSpec,
                      results: dict | None = None, *, agents: int,
                      decision_frequency: int, seed: int,
                      wrappers: list[str] | None = None) -> Path:
    """Write manifest.json atomically; raises IoError without leaving
    partial files."""
    run_dir = Path(run_dir)
    manifest = {
        "kind": "ragmark-run",
        "version": __version__,
        "created_unix": time.time(),
        "host": f"{platform.node()} {platform.machine()} "
                f"cpus={__import__('os').cpu_count()}",
        "env_id": spec.env_id,
        "agents": agents,
        "decision_frequency": decision_frequency,
        "seed": seed,
        "wrappers": wrappers or [],
        "config": config.to_dict(),
        "physics": dataclasses.asdict(spec.physics),
        "reward_weights": dataclasses.asdict(spec.reward_weights),
        "termination": dataclasses.asdict(spec.termination_params),
        "episode_cap": spec.episode_cap,
        "dimensions": {
            "obs_dim": spec.obs_dim,
            "act_dim": spec.act_dim,
            "layout": spec.layout(),
        },
        "assets": {spec.env_id: asset_sha256(spec.env_id)},
        "results": results or {},
    }
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        tmp = run_dir / "manifest.json.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        target = run_dir / "manifest.json"
        tmp.replace(target)
    except OSError as exc:
        try:
            tmp.unlink(missing_ok=True)  # type: ignore[union-attr]
        except (OSError, UnboundLocalError):
            pass
        raise IoError(f"cannot write manifest in {run_dir}: {exc}") from exc
    return target


def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc


class RunSink:
    """MetricSink writing metrics.csv rows and rolling checkpoints."""

    def __init__(self, run_dir: str | Path, checkpoint_every_updates: int = 25):
        self.run_dir = Path(run_dir)
        try:
            self.run_dir.mkdir(parents=True, exist_ok=True)
            self.metrics_path = self.run_dir / "metrics.csv"
            self._fh = open(self.metrics_path, "w", encoding="utf-8", newline="")
        except OSError as exc:
            raise IoError(f"cannot open run dir {run_dir}: {exc}") from exc
        self._writer = csv.writer(self._fh)
        self._writer.writerow(METRICS_HEADER)
        self._fh.flush()
        self.checkpoint_every = checkpoint_every_updates
        self._updates = 0

    def on_metrics(self, row: dict) -> None:
        self._writer.writerow([row.get(k, "") for k in METRICS_HEADER])
        self._fh.flush()

    def on_checkpoint(self, params: PolicyParams, agent_steps: int) -> None:
        self._updates += 1
        path = self.run_dir / "checkpoint.rgmk"
        if self._updates % self.checkpoint_every == 0 or agent_steps == 0:
            save_checkpoint(params, path)
        self._last = (params, agent_steps)

    def finalize(self, params: PolicyParams) -> Path:
        path = self.run_dir / "checkpoint.rgmk"
        save_checkpoint(params, path)
        self._fh.close()
        return path
