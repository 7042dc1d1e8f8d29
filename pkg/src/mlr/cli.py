"""Command line entry points: record, learn, drive, eval, serve."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path

from . import learning, memory, recognition, runtime, simulator
from .runtime import ControlLoop, RuntimeConfig
from .service import TickService, serve_async


def _load_world(path: str | None):
    if path is None or path == "default":
        return simulator.default_world()
    return simulator.load_world(path)


def _split_session(session_dir: str):
    p = Path(session_dir)
    return p.parent, p.name


def cmd_record(args) -> int:
    config = RuntimeConfig(
        world_path=None if args.world in (None, "default") else args.world,
        session_root=args.out,
        width=args.width,
        height=args.height,
        dt=args.dt,
        record_rate_hz=args.rate,
    )
    Path(args.out).mkdir(parents=True, exist_ok=True)
    world = _load_world(args.world)
    use_teacher = args.teacher is not None or not args.serve
    pilot = simulator.teacher_policy if use_teacher else None
    if args.serve:
        loop = ControlLoop(world, config, pilot=pilot)
        label = loop.start_recording(args.label)
        asyncio.run(serve_async(TickService(loop, steps=args.steps), config.port))
        session = memory.load_session(args.out, label)
        print(f"recorded {len(session)} records into {Path(args.out) / label}")
    else:
        label = runtime.record_demo(config, args.steps, label=args.label, pilot=pilot, world=world)
        session = memory.load_session(args.out, label)
        print(f"recorded {len(session)} records into {Path(args.out) / label}")
    return 0


def cmd_learn(args) -> int:
    root, label = _split_session(args.session)
    session = memory.load_session(root, label)
    model = learning.learn_session(session, args.components)
    learning.save_model(model, args.model)
    print(
        f"learned {model.n} components over {len(session)} images "
        f"({model.width}x{model.height}); model written to {args.model}"
    )
    return 0


def cmd_drive(args) -> int:
    world = _load_world(args.world)
    model = learning.load_model(args.model)
    session = memory.load_session_path(args.session)
    dataset = recognition.build_projected_dataset(model, session)
    config = RuntimeConfig(
        world_path=None if args.world in (None, "default") else args.world,
        model_path=args.model,
        dataset_path=args.session,
        width=model.width,
        height=model.height,
        dt=args.dt,
        rule=args.rule,
        port=args.port,
        mode="autonomous",
    )
    loop = ControlLoop(world, config, model=model, dataset=dataset)
    if args.serve:
        asyncio.run(serve_async(TickService(loop, steps=args.steps), config.port))
        summary = {"ticks": loop.tick, "collisions": None, "final_pose": None}
    else:
        collisions = 0
        poses = []
        for _ in range(args.steps):
            report = loop.run_tick()
            collisions += int(report.collided)
            poses.append((loop.state.pose.x, loop.state.pose.y, loop.state.pose.yaw))
        summary = {
            "ticks": args.steps,
            "collisions": collisions,
            "final_pose": {
                "x": loop.state.pose.x,
                "y": loop.state.pose.y,
                "yaw": loop.state.pose.yaw,
            },
            "trajectory_digest": runtime_digest(poses),
        }
        if args.report:
            Path(args.report).write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary))
    return 0


def runtime_digest(poses) -> str:
    import hashlib

    h = hashlib.sha256()
    for x, y, yaw in poses:
        h.update(f"{x!r},{y!r},{yaw!r};".encode())
    return h.hexdigest()


def cmd_eval(args) -> int:
    model = learning.load_model(args.model)
    session = memory.load_session_path(args.session)
    dataset = recognition.build_projected_dataset(model, session)
    report = runtime.evaluate(model, dataset, session)
    Path(args.report).write_text(json.dumps(report, indent=2))
    print(json.dumps({"report": str(args.report), "mean_latency_ms": report["mean_latency_ms"]}))
    return 0


def cmd_serve(args) -> int:
    config = RuntimeConfig.from_json(args.config)
    world = _load_world(config.world_path)
    model = dataset = None
    if config.model_path:
        model = learning.load_model(config.model_path)
        if config.dataset_path:
            session = memory.load_session_path(config.dataset_path)
            dataset = recognition.build_projected_dataset(model, session)
    loop = ControlLoop(world, config, model=model, dataset=dataset)
    frontend = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    asyncio.run(serve_async(TickService(loop), config.port, str(frontend)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("record", help="record a demonstration session")
    p.add_argument("--world", default="default", help="world file, or 'default'")
    p.add_argument("--out", required=True, help="session root directory")
    p.add_argument("--steps", type=int, required=True, help="simulation ticks to run")
    p.add_argument("--teacher", choices=["wall-follow"], default=None,
                   help="scripted pilot (default when not serving)")
    p.add_argument("--serve", action="store_true", help="expose the websocket service while recording")
    p.add_argument("--label", default=None, help="session label (default: current time)")
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=48)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--rate", type=float, default=1.0, help="records per second")
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("learn", help="learn an eigenspace model from a session")
    p.add_argument("--session", required=True, help="session directory (root/label)")
    p.add_argument("--components", type=int, required=True)
    p.add_argument("--model", required=True, help="output model path")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("drive", help="drive autonomously by eigenspace recognition")
    p.add_argument("--world", default="default")
    p.add_argument("--model", required=True)
    p.add_argument("--session", required=True, help="session backing the projected dataset")
    p.add_argument("--rule", choices=list(recognition.RULES), default="ranksum")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--serve", action="store_true")
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--report", default=None, help="write a JSON drive summary here")
    p.set_defaults(func=cmd_drive)

    p = sub.add_parser("eval", help="evaluate a model against a session")
    p.add_argument("--model", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--report", required=True, help="output JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the websocket control service")
    p.add_argument("--config", required=True, help="JSON runtime config")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:  # surface domain errors as clean one-liners
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
