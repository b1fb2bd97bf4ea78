"""Command-line entry points.

Subcommands: train, eval, bench, serve, motion-gen.  Failures print one
machine-parseable line to stderr (``error: <code>: <message>``) and exit
non-zero; flag errors exit 2, runtime errors exit 1.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from ..envs import AUX_ENV_IDS, ENV_IDS, make_env
from ..errors import ConfigError, RagmarkError
from ..ppo.config import (TrainerConfig, config_from_mapping,
                          load_run_section, load_trainer_config)
from ..vec import VecScene, bench_throughput

log = logging.getLogger(__name__)

ALL_ENVS = ENV_IDS + AUX_ENV_IDS


class _FlagError(Exception):
    def __init__(self, code: str, msg: str):
        super().__init__(msg)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        code = "unknown_command" if "invalid choice" in message and "command" in message \
            else "bad_flag"
        raise _FlagError(code, message)


def build_parser() -> _Parser:
    p = _Parser(prog="ragmark", description=__doc__)
    sub = p.add_subparsers(dest="command", metavar="command")

    t = sub.add_parser("train", help="run PPO training")
    t.add_argument("--env", required=True, choices=ALL_ENVS)
    t.add_argument("--agents", type=int, default=16)
    t.add_argument("--config", default=None, help="run-config YAML file")
    t.add_argument("--out", required=True, help="run directory")
    t.add_argument("--decision-frequency", type=int, default=5)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--max-steps", type=int, default=None,
                   help="override per-agent step budget")
    t.add_argument("--wrappers", default="",
                   help="comma-separated task wrappers, e.g. controller:discrete")
    t.add_argument("--from-manifest", default=None,
                   help="reproduce a run from its manifest.json")
    t.add_argument("--eval-episodes", type=int, default=5)

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--episodes", type=int, required=True)
    e.add_argument("--deterministic", action="store_true")
    e.add_argument("--agents", type=int, default=4)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--decision-frequency", type=int, default=5)

    b = sub.add_parser("bench", help="throughput benchmark")
    b.add_argument("--env", required=True, choices=ALL_ENVS)
    b.add_argument("--agents", type=int, default=16)
    b.add_argument("--seconds", type=float, default=10.0)
    b.add_argument("--decision-frequency", type=int, default=5)
    b.add_argument("--action-source", choices=("zeros", "random"), default="random")

    s = sub.add_parser("serve", help="run the vec-env protocol server")
    s.add_argument("--env", required=True, choices=ALL_ENVS)
    s.add_argument("--port", type=int, required=True)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--ckpt", default=None)
    s.add_argument("--ws", action="store_true",
                   help="also serve the browser UI (port+1); requires --ckpt")
    s.add_argument("--static-dir", default=None)

    m = sub.add_parser("motion-gen", help="write a reference-motion file")
    m.add_argument("--kind", required=True, choices=("walker-gait", "pendulum"))
    m.add_argument("--out", required=True)
    return p


def cmd_train(args) -> int:
    from ..ppo.trainer import evaluate, train
    from .manifest import RunSink, load_manifest, save_run_metadata

    wrappers = [w for w in args.wrappers.split(",") if w]
    env_id, agents, df = args.env, args.agents, args.decision_frequency
    if args.from_manifest:
        man = load_manifest(args.from_manifest)
        env_id = man["env_id"]
        agents = man["agents"]
        df = man["decision_frequency"]
        wrappers = man.get("wrappers", [])
        config = config_from_mapping(man["config"], source=args.from_manifest)
    elif args.config:
        config = load_trainer_config(args.config, env_id)
    else:
        config = TrainerConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.max_steps is not None:
        config = dataclasses.replace(config, max_steps=args.max_steps)

    spec = make_env(env_id)
    if wrappers and args.config:
        from ..tasks.base import make_wrapper_stack
        section = load_run_section(args.config, env_id)
        wrapper = make_wrapper_stack(wrappers, spec, section)
    else:
        wrapper = wrappers or None
    scene = VecScene(spec, n=agents, decision_frequency=df, seed=config.seed,
                     wrapper=wrapper)
    sink = RunSink(args.out)
    save_run_metadata(args.out, config, spec, agents=agents,
                      decision_frequency=df, seed=config.seed, wrappers=wrappers)
    log.info("training %s: agents=%d max_steps=%d (total %d agent steps)",
             env_id, agents, config.max_steps, agents * config.max_steps)
    params = train(scene, config, sink)
    ckpt = sink.finalize(params)
    results: dict = {"total_agent_steps": agents * config.max_steps,
                     "checkpoint": ckpt.name}
    if args.eval_episodes > 0:
        eval_scene = VecScene(spec, n=min(4, agents), decision_frequency=df,
                              seed=config.seed + 1, wrapper=wrappers or None)
        rep = evaluate(params, eval_scene, episodes=args.eval_episodes,
                       deterministic=True, seed=config.seed + 1)
        results["final_eval"] = dataclasses.asdict(rep)
        print(f"final eval: return {rep.mean_return:.2f} length {rep.mean_length:.1f} "
              f"forward {rep.mean_forward_distance:.2f} m over {rep.episodes} episodes")
    save_run_metadata(args.out, config, spec, results, agents=agents,
                      decision_frequency=df, seed=config.seed, wrappers=wrappers)
    print(f"run complete: {args.out}")
    return 0


def cmd_eval(args) -> int:
    from ..ppo.checkpoint import load_checkpoint
    from ..ppo.trainer import evaluate

    params = load_checkpoint(args.ckpt)
    spec = make_env(params.env_id)
    scene = VecScene(spec, n=args.agents, decision_frequency=args.decision_frequency,
                     seed=args.seed, wrapper=params.wrappers or None)
    rep = evaluate(params, scene, episodes=args.episodes,
                   deterministic=args.deterministic, seed=args.seed)
    print(f"mean_return: {rep.mean_return}")
    print(f"mean_length: {rep.mean_length}")
    print(f"mean_forward_distance: {rep.mean_forward_distance}")
    print(f"episodes: {rep.episodes}")
    return 0


def cmd_bench(args) -> int:
    spec = make_env(args.env)
    scene = VecScene(spec, n=args.agents,
                     decision_frequency=args.decision_frequency, seed=0)
    report = bench_throughput(scene, args.seconds, args.action_source)
    sys.stdout.write(report.to_text())
    return 0


def cmd_serve(args) -> int:
    import asyncio

    from .tcp_server import VecEnvServer

    if args.ws and not args.ckpt:
        raise ConfigError("--ws requires --ckpt (the policy runs server-side)")

    async def main() -> None:
        server = VecEnvServer(args.host, args.port)
        await server.start()
        tasks = [asyncio.create_task(server.serve_forever())]
        if args.ws:
            import uvicorn

            from .ui_server import build_app
            app = build_app(args.ckpt, static_dir=args.static_dir)
            ui = uvicorn.Server(uvicorn.Config(
                app, host=args.host, port=args.port + 1, log_level="warning"))
            tasks.append(asyncio.create_task(ui.serve()))
            log.info("ui socket on ws://%s:%d/ws", args.host, args.port + 1)
        await asyncio.gather(*tasks)

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return 0


def cmd_motion_gen(args) -> int:
    from ..tasks.imitation import (pendulum_swing_motion, serialize_motion,
                                   walker_gait_motion)
    motion = walker_gait_motion() if args.kind == "walker-gait" \
        else pendulum_swing_motion()
    Path(args.out).write_text(serialize_motion(motion), encoding="utf-8")
    print(f"wrote {motion.name} ({len(motion.frames)} frames) to {args.out}")
    return 0


_HANDLERS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "serve": cmd_serve,
    "motion-gen": cmd_motion_gen,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _FlagError("unknown_command", "no command given; "
                             f"choose from {sorted(_HANDLERS)}")
        return _HANDLERS[args.command](args)
    except _FlagError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except RagmarkError as exc:
        print(f"error: {exc.oneline()}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io_error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
