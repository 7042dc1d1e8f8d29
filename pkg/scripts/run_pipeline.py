#!/usr/bin/env python3
"""Run the whole stack once: record, learn, evaluate, drive.

Records a teacher demonstration in the default world, learns an
eigenspace model from it, scores self-recognition and reconstruction
error, then lets the recognizer drive the robot and reports whether it
stayed collision-free. Useful as a smoke test and as a worked example
of the library API.

Run: python3 scripts/run_pipeline.py [--steps 6000] [--components 5]
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mlr import learning, memory, recognition, runtime, simulator
from mlr.runtime import ControlLoop, RuntimeConfig


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path, default=None,
                        help="working directory (default: a fresh temp dir)")
    parser.add_argument("--steps", type=int, default=6000)
    parser.add_argument("--components", type=int, default=5)
    parser.add_argument("--rule", default="ranksum",
                        choices=sorted(recognition.RULES))
    parser.add_argument("--drive-steps", type=int, default=300)
    args = parser.parse_args()

    if args.out is None:
        tmp = tempfile.TemporaryDirectory(prefix="mlr-pipeline-")
        out = Path(tmp.name)
    else:
        out = args.out
        out.mkdir(parents=True, exist_ok=True)

    world = simulator.default_world()
    sessions = out / "sessions"
    sessions.mkdir(exist_ok=True)

    config = RuntimeConfig(session_root=str(sessions))
    label = runtime.record_demo(config, args.steps, world=world)
    session = memory.load_session(sessions, label)
    print(f"recorded  {len(session)} records -> {sessions / label}")

    model = learning.learn_session(session, args.components)
    model_path = out / "model.txt"
    learning.save_model(model, model_path)
    spectrum = model.eigenvalues / model.eigenvalues[0]
    print(f"learned   {model.n} components, eigenvalue ratios "
          + " ".join(f"{r:.3f}" for r in spectrum))

    dataset = recognition.build_projected_dataset(model, session)
    report = runtime.evaluate(model, dataset, session)
    report_path = out / "eval.json"
    report_path.write_text(json.dumps(report, indent=2) + "\n")
    print("evaluated self-recognition agreement:")
    for rule, agreement in sorted(report["agreement_by_rule"].items()):
        print(f"          {rule:<8} {agreement:.3f}")
    print(f"          mean latency {report['mean_latency_ms']:.2f} ms/query")

    loop = ControlLoop(
        world,
        RuntimeConfig(mode="autonomous", rule=args.rule),
        model=model,
        dataset=dataset,
    )
    collisions = 0
    for _ in range(args.drive_steps):
        collisions += int(loop.run_tick().collided)
    pose = loop.state.pose
    print(f"drove     {args.drive_steps} ticks under '{args.rule}', "
          f"{collisions} collisions, final pose "
          f"({pose.x:.3f}, {pose.y:.3f}, {pose.yaw:.3f})")
    print(f"artifacts {model_path} and {report_path}")
    return 1 if collisions else 0


if __name__ == "__main__":
    sys.exit(main())
