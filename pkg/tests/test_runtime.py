import json

import numpy as np
import pytest

from mlr import learning, memory, recognition, runtime, simulator
from mlr.errors import (
    CollisionDuringDemo,
    ConfigError,
    InsufficientData,
    NotReady,
    SessionConflict,
)
from mlr.memory import CommandTriple, Pose2D
from mlr.runtime import ControlLoop, RuntimeConfig

from conftest import SQUARE_WORLD_TEXT

LABEL = "2024-01-01T10-00-00"


def square_config(tmp_path, **overrides):
    kwargs = dict(session_root=str(tmp_path / "sessions"), width=16, height=12)
    kwargs.update(overrides)
    return RuntimeConfig(**kwargs)


# -- configuration --

def test_default_cadence_is_ten_ticks():
    assert RuntimeConfig().record_interval == 10


def test_config_validation():
    with pytest.raises(ConfigError):
        RuntimeConfig(dt=0.0)
    with pytest.raises(ConfigError):
        RuntimeConfig(record_rate_hz=0.0)
    with pytest.raises(ConfigError):
        RuntimeConfig(record_rate_hz=20.0, dt=0.1)  # faster than one per tick
    with pytest.raises(ConfigError):
        RuntimeConfig(rule="plurality")
    with pytest.raises(ConfigError):
        RuntimeConfig(mode="hybrid")
    with pytest.raises(ConfigError):
        RuntimeConfig(width=1, height=1)


def test_config_from_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"width": 32, "height": 24, "dt": 0.05, "port": 9001}))
    config = RuntimeConfig.from_json(path)
    assert (config.width, config.height, config.dt, config.port) == (32, 24, 0.05, 9001)
    assert config.rule == "ranksum"


# -- manual ticks --

def test_manual_tick_applies_zero_until_commanded(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path))
    report = loop.run_tick()
    assert report.applied == CommandTriple()
    assert loop.state.pose == square_world.start
    assert report.recognition is None
    assert not report.recording and report.session_index is None


def test_inbox_is_latest_wins(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path))
    loop.set_command(CommandTriple(0.25, 0.0, 0.0))
    loop.set_command(CommandTriple(0.5, 0.0, 0.0))
    report = loop.run_tick()
    assert report.applied == CommandTriple(0.5, 0.0, 0.0)
    # the inbox persists: the same command applies again next tick
    assert loop.run_tick().applied == CommandTriple(0.5, 0.0, 0.0)


def test_inbox_commands_are_clamped(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path))
    loop.set_command(CommandTriple(9.0, -9.0, 9.0))
    assert loop.run_tick().applied == CommandTriple(1.0, -1.5, 1.0)


def test_pilot_overrides_inbox_in_manual_mode(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path),
                       pilot=lambda frame: CommandTriple(0.25, 0.0, 0.0))
    loop.set_command(CommandTriple(1.0, 0.0, 0.0))
    assert loop.run_tick().applied == CommandTriple(0.25, 0.0, 0.0)


def test_tick_numbers_increase(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path))
    assert [loop.run_tick().tick for _ in range(3)] == [0, 1, 2]


def test_collision_is_reported(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path))
    loop.set_command(CommandTriple(1.0, 0.0, 0.0))
    reports = [loop.run_tick() for _ in range(30)]
    assert any(r.collided for r in reports)
    assert loop.state.pose.x < 4.0 - simulator.ROBOT_RADIUS + 0.1


# -- modes --

def test_autonomous_mode_requires_model(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path))
    with pytest.raises(NotReady):
        loop.set_mode("autonomous")
    with pytest.raises(ConfigError):
        loop.set_mode("cruise")


def test_autonomous_tick_without_model_fails(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path, mode="autonomous"))
    with pytest.raises(NotReady):
        loop.run_tick()


# -- recording cadence --

def test_recording_cadence_every_tenth_tick(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path))
    loop.start_recording(LABEL)
    reports = [loop.run_tick() for _ in range(35)]
    recorded = [r.tick for r in reports if r.session_index is not None]
    assert recorded == [9, 19, 29]
    indices = [r.session_index for r in reports if r.session_index is not None]
    assert indices == [0, 1, 2]
    loop.stop_recording()
    assert len(memory.load_session(loop.config.session_root, LABEL)) == 3


def test_recording_cadence_counts_from_recording_start(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path))
    for _ in range(5):
        loop.run_tick()
    loop.start_recording(LABEL)
    reports = [loop.run_tick() for _ in range(12)]
    recorded = [r.tick for r in reports if r.session_index is not None]
    assert recorded == [14]  # ten ticks after recording began


def test_recorded_frame_is_the_sensed_state(tmp_path, square_world):
    # the record pairs the frame sensed at the top of the tick with the
    # command applied during that same tick
    loop = ControlLoop(square_world, square_config(tmp_path))
    loop.set_command(CommandTriple(0.5, 0.0, 0.0))
    loop.start_recording(LABEL)
    for _ in range(10):
        report = loop.run_tick()
    loop.stop_recording()
    session = memory.load_session(loop.config.session_root, LABEL)
    rec = session.records[0]
    assert rec.command == CommandTriple(0.5, 0.0, 0.0)
    # nine ticks of 0.05 m precede the recorded sense
    assert abs(rec.pose.x - (2.0 + 9 * 0.05)) < 1e-9
    assert np.array_equal(session.read_image(0), report.frame.image)


def test_start_recording_is_idempotent(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path))
    label = loop.start_recording(LABEL)
    assert loop.start_recording("2030-01-01T00-00-00") == label  # already recording
    assert loop.recording
    assert loop.stop_recording() == label
    assert not loop.recording
    assert loop.stop_recording() is None


def test_start_recording_conflicts_surface(tmp_path, square_world):
    loop = ControlLoop(square_world, square_config(tmp_path))
    loop.start_recording(LABEL)
    loop.set_command(CommandTriple(0.1, 0.0, 0.0))
    for _ in range(10):
        loop.run_tick()
    loop.stop_recording()
    with pytest.raises(SessionConflict):
        loop.start_recording(LABEL)  # the directory already holds records


def test_auto_label_bumps_past_conflicts(tmp_path, square_world, monkeypatch):
    import datetime as real_datetime

    class FrozenDateTime(real_datetime.datetime):
        @classmethod
        def now(cls, tz=None):
            return cls(2024, 1, 1, 10, 0, 0)

    monkeypatch.setattr(runtime, "datetime", FrozenDateTime)
    config = square_config(tmp_path)
    # occupy the frozen-clock label with a non-empty session
    prior = ControlLoop(simulator.parse_world(SQUARE_WORLD_TEXT), config)
    prior.start_recording(LABEL)
    for _ in range(10):
        prior.run_tick()
    prior.stop_recording()

    loop = ControlLoop(simulator.parse_world(SQUARE_WORLD_TEXT), config)
    label = loop.start_recording()
    assert label == "2024-01-01T10-00-01"  # bumped one second past the clash


# -- scripted demos --

def test_record_demo_produces_expected_count(tmp_path):
    config = square_config(tmp_path)
    world = simulator.parse_world(SQUARE_WORLD_TEXT)
    label = runtime.record_demo(config, steps=100, label=LABEL,
                                pilot=lambda f: CommandTriple(0.0, 0.5, 0.0),
                                world=world)
    session = memory.load_session(config.session_root, label)
    assert len(session) == 10


def test_record_demo_too_short_raises(tmp_path):
    config = square_config(tmp_path)
    world = simulator.parse_world(SQUARE_WORLD_TEXT)
    with pytest.raises(InsufficientData):
        runtime.record_demo(config, steps=9, label=LABEL,
                            pilot=lambda f: CommandTriple(), world=world)


def test_record_demo_aborts_on_collision(tmp_path):
    config = square_config(tmp_path)
    world = simulator.parse_world(SQUARE_WORLD_TEXT)
    with pytest.raises(CollisionDuringDemo):
        runtime.record_demo(config, steps=100, label=LABEL,
                            pilot=lambda f: CommandTriple(1.0, 0.0, 0.0),
                            world=world)
    # the partial session stays on disk for inspection
    assert (tmp_path / "sessions" / LABEL).is_dir()


def test_record_demo_is_deterministic(tmp_path):
    config = square_config(tmp_path)
    world = simulator.parse_world(SQUARE_WORLD_TEXT)
    a = runtime.record_demo(config, steps=60, label="2024-01-01T10-00-00",
                            pilot=simulator.teacher_policy, world=world)
    b = runtime.record_demo(config, steps=60, label="2024-01-01T11-00-00",
                            pilot=simulator.teacher_policy, world=world)
    sa = memory.load_session(config.session_root, a)
    sb = memory.load_session(config.session_root, b)
    assert len(sa) == len(sb) == 6
    for i in range(6):
        ra, rb = sa.records[i], sb.records[i]
        assert (ra.pose, ra.command, ra.distances) == (rb.pose, rb.command, rb.distances)
        assert np.array_equal(sa.read_image(i), sb.read_image(i))


# -- autonomous replay --

def scripted_demo(tmp_path, steps=200):
    """Record a varied-command demo and keep the full-precision poses."""
    config = RuntimeConfig(session_root=str(tmp_path / "sessions"), width=32, height=24)
    world = simulator.default_world()
    counter = [0]

    def pilot(frame):
        k = counter[0]
        counter[0] += 1
        # 7 distinct angular rates, all binary-representable and unclamped
        return CommandTriple(0.375, 0.75 + 0.0625 * (k % 7), 0.0)

    loop = ControlLoop(world, config, pilot=pilot)
    loop.start_recording(LABEL)
    for _ in range(steps):
        report = loop.run_tick()
        assert not report.collided
    exact_poses = [rec.pose for rec in loop.session.manifest.records]
    loop.stop_recording()
    session = memory.load_session(config.session_root, LABEL)
    return config, world, session, exact_poses


def test_autonomous_replay_returns_the_stored_command(tmp_path):
    config, world, session, exact_poses = scripted_demo(tmp_path)
    assert len(session) == 20
    assert len({rec.command for rec in session.records}) == 7
    model = learning.learn_session(session, len(session) - 1)
    dataset = recognition.build_projected_dataset(model, session)

    for k in (0, 7, 13):
        # re-sensing from the exact recorded pose reproduces the stored
        # image bit for bit, so recognition must return record k's command
        start_world = simulator.WorldModel(world.walls, exact_poses[k], world.bounds)
        drive = RuntimeConfig(session_root=config.session_root, width=32, height=24,
                              rule="msd", mode="autonomous")
        loop = ControlLoop(start_world, drive, model=model, dataset=dataset)
        report = loop.run_tick()
        assert report.recognition is not None
        assert report.recognition.best_index == k
        assert report.applied == session.records[k].command
        assert report.recognition.per_metric["msd"]["score"] < 1e-9


def test_evaluate_self_agreement(tmp_path):
    config, world, session, _ = scripted_demo(tmp_path)
    model = learning.learn_session(session, len(session) - 1)
    dataset = recognition.build_projected_dataset(model, session)
    report = runtime.evaluate(model, dataset, session)

    assert report["agreement_by_rule"]["msd"] == 1.0
    assert set(report["agreement_by_rule"]) == set(recognition.RULES)
    for value in report["agreement_by_rule"].values():
        assert 0.0 <= value <= 1.0
    errors = [report["reconstruction_error_by_n"][n] for n in range(1, model.n + 1)]
    assert all(b <= a + 1e-9 for a, b in zip(errors, errors[1:]))
    assert report["mean_latency_ms"] > 0.0


def test_evaluate_rejects_geometry_mismatch(tmp_path, rng):
    from conftest import make_session, random_rasters

    session = make_session(tmp_path, random_rasters(rng, 3))
    model = learning.learn_session(session, 2)
    other = make_session(tmp_path, random_rasters(rng, 3, height=8, width=8),
                         label="2024-01-01T11-00-00")
    dataset = recognition.build_projected_dataset(model, session)
    with pytest.raises(Exception):
        runtime.evaluate(model, dataset, other)
