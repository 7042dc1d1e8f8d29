"""Tick-loop control runtime.

One ControlLoop owns the world and robot state and advances them one
tick at a time: sense, pick a command (manual inbox, scripted pilot, or
eigenspace recognition), step, and optionally write an IO record when
the tick lands on the recording cadence. Learning never runs inside the
loop; models are trained offline by the ``learn`` CLI command and only
loaded here.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from . import memory, recognition, simulator
from .errors import (
    CollisionDuringDemo,
    ConfigError,
    InsufficientData,
    NotReady,
    SessionConflict,
    ShapeError,
)
from .learning import EigenModel, scale_image
from .memory import CommandTriple, Session
from .recognition import ProjectedDataset, RecognitionResult, RULES
from .simulator import RobotState, SensorFrame, WorldModel

MODES = ("manual", "autonomous")


@dataclass
class RuntimeConfig:
    world_path: str | None = None  # None = built-in default world
    session_root: str = "sessions"
    model_path: str | None = None
    dataset_path: str | None = None  # session dir backing the projected dataset
    width: int = 64
    height: int = 48
    dt: float = 0.1
    record_rate_hz: float = 1.0
    rule: str = "ranksum"
    port: int = 8080
    mode: str = "manual"

    def __post_init__(self):
        if self.width * self.height < 4:
            raise ConfigError(f"image geometry {self.width}x{self.height} is too small")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.record_rate_hz <= 0 or self.record_rate_hz > 1.0 / self.dt + 1e-9:
            raise ConfigError(
                f"record_rate_hz={self.record_rate_hz} must lie in (0, 1/dt={1.0 / self.dt}]"
            )
        if self.rule not in RULES:
            raise ConfigError(f"rule {self.rule!r} not one of {RULES}")
        if self.mode not in MODES:
            raise ConfigError(f"mode {self.mode!r} not one of {MODES}")

    @property
    def record_interval(self) -> int:
        return round(1.0 / (self.dt * self.record_rate_hz))

    @classmethod
    def from_json(cls, path) -> "RuntimeConfig":
        return cls(**json.loads(Path(path).read_text()))


@dataclass
class TickReport:
    tick: int
    frame: SensorFrame
    applied: CommandTriple
    recognition: RecognitionResult | None = None
    recording: bool = False
    session_index: int | None = None
    collided: bool = False


def now_label() -> str:
    return datetime.now().strftime("%Y-%m-%dT%H-%M-%S")


class ControlLoop:
    """Owns world + robot state; run_tick() is the only mutator.

    Teleop commands land in a latest-wins inbox and are applied on the
    next tick; they never queue. A scripted ``pilot`` (frame -> command)
    overrides the inbox while the loop is in manual mode.
    """

    def __init__(
        self,
        world: WorldModel,
        config: RuntimeConfig,
        model: EigenModel | None = None,
        dataset: ProjectedDataset | None = None,
        pilot=None,
    ):
        self.world = world
        self.config = config
        self.model = model
        self.dataset = dataset
        self.pilot = pilot
        self.mode = config.mode
        self.state = RobotState(pose=world.start.normalized())
        self.tick = 0
        self.inbox = CommandTriple()
        self.session: Session | None = None
        self._ticks_recorded = 0

    # -- teleop-facing mutations (latest wins, applied next tick) --

    def set_command(self, command: CommandTriple) -> None:
        self.inbox = command

    def set_mode(self, mode: str) -> None:
        if mode not in MODES:
            raise ConfigError(f"mode {mode!r} not one of {MODES}")
        if mode == "autonomous" and (self.model is None or self.dataset is None):
            raise NotReady("autonomous mode needs a loaded model and projected dataset")
        self.mode = mode

    @property
    def recording(self) -> bool:
        return self.session is not None

    def start_recording(self, label: str | None = None) -> str:
        if self.session is not None:
            return self.session.label
        if label is None:
            base = datetime.now()
            for bump in range(1000):
                candidate = (base + timedelta(seconds=bump)).strftime("%Y-%m-%dT%H-%M-%S")
                try:
                    self.session = memory.open_session(
                        self.config.session_root, candidate, self.config.width,
                        self.config.height, self.config.record_rate_hz,
                    )
                    break
                except SessionConflict:
                    continue
            else:
                raise SessionConflict("could not find a free session label")
        else:
            self.session = memory.open_session(
                self.config.session_root, label, self.config.width, self.config.height,
                self.config.record_rate_hz,
            )
        self._ticks_recorded = 0
        return self.session.label

    def stop_recording(self) -> str | None:
        # explicit None test: an empty Session has len 0 and is falsy
        label = self.session.label if self.session is not None else None
        self.session = None
        return label

    # -- the tick --

    def run_tick(self) -> TickReport:
        frame = simulator.sense(self.world, self.state, self.config.width, self.config.height)
        result = None
        if self.mode == "autonomous":
            if self.model is None or self.dataset is None:
                raise NotReady("autonomous mode needs a loaded model and projected dataset")
            result = recognition.recognize(
                self.model, self.dataset, scale_image(frame.image), self.config.rule
            )
            applied = result.command
        elif self.pilot is not None:
            applied = self.pilot(frame)
        else:
            applied = self.inbox
        applied = applied.clamped()

        self.state = simulator.step(self.world, self.state, applied, self.config.dt)

        session_index = None
        if self.session is not None:
            self._ticks_recorded += 1
            if self._ticks_recorded % self.config.record_interval == 0:
                session_index = self.session.append_record(
                    frame.image, frame.distances, frame.pose, applied
                )
        report = TickReport(
            tick=self.tick,
            frame=frame,
            applied=applied,
            recognition=result,
            recording=self.session is not None,
            session_index=session_index,
            collided=self.state.collided,
        )
        self.tick += 1
        return report


def record_demo(
    config: RuntimeConfig,
    steps: int,
    label: str | None = None,
    pilot=simulator.teacher_policy,
    world: WorldModel | None = None,
) -> str:
    """Drive the scripted pilot for ``steps`` ticks, recording on cadence.

    Raises CollisionDuringDemo on any collision (a demo must be clean) and
    InsufficientData when ``steps`` is too short to produce a single record.
    The partially written session directory is left on disk for inspection.
    """
    if world is None:
        world = simulator.load_world(config.world_path) if config.world_path else simulator.default_world()
    loop = ControlLoop(world, config, pilot=pilot)
    session_label = loop.start_recording(label)
    for _ in range(steps):
        report = loop.run_tick()
        if report.collided:
            raise CollisionDuringDemo(
                f"pilot collided at tick {report.tick}, pose {loop.state.pose}"
            )
    if len(loop.session) == 0:
        raise InsufficientData(
            f"{steps} ticks at dt={config.dt} never reached the "
            f"{config.record_interval}-tick recording cadence"
        )
    loop.stop_recording()
    return session_label


def evaluate(model: EigenModel, dataset: ProjectedDataset, session) -> dict:
    """Self-recognition agreement, reconstruction-error sweep and latency report."""
    w, h = session.manifest.image_width, session.manifest.image_height
    if (w, h) != (model.width, model.height):
        raise ShapeError(f"session geometry {w}x{h} != model {model.width}x{model.height}")

    vectors = [scale_image(img) for img in session.images()]
    t = len(vectors)

    agreement_by_rule = {}
    latencies = []
    for rule in RULES:
        agree = 0
        for k, x in enumerate(vectors):
            t0 = time.perf_counter()
            result = recognition.recognize(model, dataset, x, rule)
            latencies.append(time.perf_counter() - t0)
            if result.command == dataset.commands[k]:
                agree += 1
            else:
                tied = recognition.tied_best_indices(model, dataset, x, rule)
                if any(dataset.commands[j] == dataset.commands[k] for j in tied):
                    agree += 1
        agreement_by_rule[rule] = agree / t

    # reconstruction sweep: peel components off the centered residual one by one
    phi = np.array(vectors).T - model.mu[:, None]  # (d, t)
    omegas = model.components @ phi  # (n, t)
    reconstruction_error_by_n = {}
    residual = phi.copy()
    for i in range(model.n):
        residual -= np.outer(model.components[i], omegas[i])
        reconstruction_error_by_n[i + 1] = float(np.mean(np.sum(residual * residual, axis=0)))

    return {
        "agreement_by_rule": agreement_by_rule,
        "reconstruction_error_by_n": reconstruction_error_by_n,
        "mean_latency_ms": float(np.mean(latencies) * 1e3),
    }
