#!/usr/bin/env python3
"""Full-budget hopper locomotion runs (3 seeds x 4.8M agent steps).

Uses the benchmarks.yaml hopper section with the retuned upright weight
(w_upright=1.0, recorded in each run manifest); writes runs under
runs/hopper_seed<k>/ and prints the final evaluations.
"""

import dataclasses
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from ragmark.envs import make_env
from ragmark.envs.spec import RewardWeights
from ragmark.harness.manifest import RunSink, save_run_metadata
from ragmark.ppo import load_trainer_config, train
from ragmark.ppo.trainer import evaluate
from ragmark.vec import VecScene

WEIGHTS = RewardWeights(w_upright=1.0, height_threshold=1.1)


def run_seed(seed: int, out_root: Path, max_steps: int | None = None) -> dict:
    spec = make_env("hopper", reward_weights=WEIGHTS)
    config = load_trainer_config(
        Path(__file__).resolve().parent.parent / "configs" / "benchmarks.yaml", "hopper")
    config = dataclasses.replace(config, seed=seed)
    if max_steps is not None:
        config = dataclasses.replace(config, max_steps=max_steps)
    scene = VecScene(spec, n=16, decision_frequency=5, seed=seed)
    out = out_root / f"hopper_seed{seed}"
    sink = RunSink(out)
    save_run_metadata(out, config, spec, agents=16, decision_frequency=5, seed=seed)
    t0 = time.time()
    params = train(scene, config, sink)
    ckpt = sink.finalize(params)
    wall = time.time() - t0
    ev = VecScene(spec, n=4, decision_frequency=5, seed=seed + 1000)
    rep = evaluate(params, ev, episodes=20, deterministic=True, seed=seed + 1000)
    results = {
        "total_agent_steps": 16 * config.max_steps,
        "wall_clock_s": wall,
        "checkpoint": ckpt.name,
        "final_eval": dataclasses.asdict(rep),
        "reward_weight_note": "w_upright retuned 0.1 -> 1.0 for locomotion",
    }
    save_run_metadata(out, config, spec, results, agents=16,
                      decision_frequency=5, seed=seed)
    print(f"seed {seed}: forward {rep.mean_forward_distance:.2f} m, "
          f"return {rep.mean_return:.1f}, length {rep.mean_length:.0f}, "
          f"wall {wall/60:.1f} min", flush=True)
    return results


def main() -> None:
    out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("runs")
    max_steps = int(float(sys.argv[2])) if len(sys.argv) > 2 else None
    dists = []
    for seed in (1, 2, 3):
        results = run_seed(seed, out_root, max_steps)
        dists.append(results["final_eval"]["mean_forward_distance"])
    ok = sum(d > 5.0 for d in dists)
    print(f"forward distances: {[round(d, 2) for d in dists]}; >5 m on {ok}/3 seeds")


if __name__ == "__main__":
    main()
