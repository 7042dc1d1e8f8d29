#!/usr/bin/env python3
"""Search start poses for the shipped default world.

The scripted teacher has no stable wall-hugging equilibrium (its heading
feedback is a saddle next to a straight wall), so the shipped start pose
must put it on an orbit that stays collision-free for far longer than any
recording we run. This script sweeps candidate poses, simulates long
horizons, and reports clearance margins plus how varied the recorded
commands and IR readings would be, then checks the full
record -> learn -> autonomous-drive loop for the chosen candidate.

Run: python3 scripts/tune_default_world.py [--horizon 20000]
"""

import argparse
import math
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mlr import learning, memory, recognition, runtime, simulator
from mlr.memory import Pose2D
from mlr.runtime import ControlLoop, RuntimeConfig
from mlr.simulator import RobotState, WorldModel


def simulate(world: WorldModel, start: Pose2D, ticks: int, dt: float = 0.1):
    state = RobotState(pose=start.normalized())
    min_clearance = math.inf
    commands = []
    ir_spans = []
    for k in range(ticks):
        frame = simulator.sense(world, state, 64, 48)
        cmd = simulator.teacher_policy(frame)
        commands.append((cmd.linear, cmd.angular))
        ir_spans.append(frame.distances)
        state = simulator.step(world, state, cmd, dt)
        if state.collided:
            return {"collided_at": k, "min_clearance": 0.0}
        p = np.array([state.pose.x, state.pose.y])
        min_clearance = min(
            min_clearance, float(simulator._segment_distances(p, world.walls).min())
        )
    commands = np.array(commands)
    ir = np.array(ir_spans)
    return {
        "collided_at": None,
        "min_clearance": min_clearance,
        "distinct_commands": len({tuple(c) for c in commands}),
        "angular_span": float(commands[:, 1].max() - commands[:, 1].min()),
        "ir_below_cap_frac": float((ir < simulator.IR_MAX_RANGE - 1e-9).mean()),
    }


def closed_loop_check(world_text: str, start: Pose2D, tmp: Path):
    """Full pipeline on the candidate: 6000-tick record, learn 5, drive 300."""
    world = simulator.parse_world(world_text)
    config = RuntimeConfig(session_root=str(tmp / "sessions"))
    (tmp / "sessions").mkdir(exist_ok=True)
    label = runtime.record_demo(config, 6000, label="2000-01-01T00-00-00", world=world)
    session = memory.load_session(tmp / "sessions", label)
    model = learning.learn_session(session, 5)
    dataset = recognition.build_projected_dataset(model, session)
    spectrum = model.eigenvalues / model.eigenvalues[0]
    loop = ControlLoop(world, RuntimeConfig(mode="autonomous"), model=model, dataset=dataset)
    collisions = 0
    for _ in range(300):
        collisions += int(loop.run_tick().collided)
    return {
        "records": len(session),
        "eig_ratio_5": float(spectrum[-1]),
        "drive_collisions": collisions,
        "drive_final": (loop.state.pose.x, loop.state.pose.y),
    }


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--horizon", type=int, default=20000)
    parser.add_argument("--full-check", action="store_true")
    args = parser.parse_args()

    world = simulator.default_world()
    candidates = [world.start] + [
        Pose2D(x, y, yaw)
        for x in (3.0, 4.0, 5.0, 6.0, 7.0)
        for y in (2.0, 2.5, 3.0, 3.6, 4.5, 5.5)
        for yaw in (0.0, math.pi / 2, math.pi)
    ]
    print(f"{'start':>22}  {'result':<46}")
    best = None
    for pose in candidates:
        r = simulate(world, pose, args.horizon)
        tag = f"({pose.x:.1f},{pose.y:.1f},{pose.yaw:.2f})"
        if r["collided_at"] is not None:
            print(f"{tag:>22}  collided at tick {r['collided_at']}")
            continue
        print(
            f"{tag:>22}  clear={r['min_clearance']:.3f} cmds={r['distinct_commands']:>4} "
            f"angspan={r['angular_span']:.3f} ir<cap={r['ir_below_cap_frac']:.2f}"
        )
        key = (r["min_clearance"] > 0.5, r["distinct_commands"], r["min_clearance"])
        if best is None or key > best[0]:
            best = (key, pose, r)

    if best:
        _, pose, r = best
        print(f"\nbest: ({pose.x},{pose.y},{pose.yaw}) -> {r}")
        if args.full_check:
            with tempfile.TemporaryDirectory() as tmp:
                world_text = simulator.world_to_text(
                    WorldModel(world.walls, pose, world.bounds)
                )
                print("closed loop:", closed_loop_check(world_text, pose, Path(tmp)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
