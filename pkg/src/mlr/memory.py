"""Demonstration session store.

A session is a directory named by its timestamp label containing one
``img_<index>.ppm`` per sample and a ``session.xml`` manifest that pairs
every image with the distances, pose and command captured at the same
tick. The manifest is rewritten atomically (temp file + rename) on every
append, so a crash mid-recording never corrupts earlier records.
"""

from __future__ import annotations

import math
import os
import re
import tempfile
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import netpbm
from .errors import InvalidLabel, MissingAsset, ParseError, SessionConflict, ShapeError

# default actuator limits (m/s, rad/s); commands are clamped to these by the simulator
V_MAX = 1.0
W_MAX = 1.5

IR_COUNT = 8

MANIFEST_NAME = "session.xml"
LABEL_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}-\d{2}-\d{2}$")

TAU = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(a, TAU)
    return r + TAU if r <= -math.pi else r


@dataclass(frozen=True)
class CommandTriple:
    """One actuator command: linear m/s, angular rad/s, fork position in [0, 1]."""

    linear: float = 0.0
    angular: float = 0.0
    fork: float = 0.0

    def clamped(self, v_max: float = V_MAX, w_max: float = W_MAX) -> "CommandTriple":
        return CommandTriple(
            linear=min(max(self.linear, -v_max), v_max),
            angular=min(max(self.angular, -w_max), w_max),
            fork=min(max(self.fork, 0.0), 1.0),
        )


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    def normalized(self) -> "Pose2D":
        return Pose2D(self.x, self.y, normalize_angle(self.yaw))


@dataclass(frozen=True)
class IORecord:
    index: int
    image_file: str
    distances: tuple  # 8 IR ranges, meters
    pose: Pose2D
    command: CommandTriple


@dataclass
class SessionManifest:
    timestamp_label: str
    image_width: int
    image_height: int
    rate_hz: float
    records: list  # list[IORecord], indices dense 0..len-1


def _fmt(x: float) -> str:
    # 12 significant digits keep the manifest readable while re-parsing
    # within 1e-9 of the recorded value at any session-scale magnitude
    return format(float(x), ".12g")


def manifest_to_xml(manifest: SessionManifest) -> bytes:
    root = ET.Element(
        "session",
        timestamp=manifest.timestamp_label,
        width=str(manifest.image_width),
        height=str(manifest.image_height),
        rate=_fmt(manifest.rate_hz),
    )
    for rec in manifest.records:
        r = ET.SubElement(root, "record", index=str(rec.index))
        ET.SubElement(r, "image").text = rec.image_file
        ET.SubElement(r, "distances").text = " ".join(_fmt(d) for d in rec.distances)
        ET.SubElement(r, "pose", x=_fmt(rec.pose.x), y=_fmt(rec.pose.y), yaw=_fmt(rec.pose.yaw))
        ET.SubElement(
            r,
            "command",
            linear=_fmt(rec.command.linear),
            angular=_fmt(rec.command.angular),
            fork=_fmt(rec.command.fork),
        )
    tree = ET.ElementTree(root)
    ET.indent(tree)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def manifest_from_xml(data: bytes) -> SessionManifest:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as e:
        raise ParseError(f"malformed session manifest: {e}") from None
    if root.tag != "session":
        raise ParseError(f"unexpected root element {root.tag!r}")
    try:
        manifest = SessionManifest(
            timestamp_label=root.attrib["timestamp"],
            image_width=int(root.attrib["width"]),
            image_height=int(root.attrib["height"]),
            rate_hz=float(root.attrib["rate"]),
            records=[],
        )
        for r in root.findall("record"):
            distances = tuple(float(t) for t in r.findtext("distances", "").split())
            pose_el = r.find("pose")
            cmd_el = r.find("command")
            if pose_el is None or cmd_el is None:
                raise ParseError("record missing pose or command element")
            manifest.records.append(
                IORecord(
                    index=int(r.attrib["index"]),
                    image_file=r.findtext("image", ""),
                    distances=distances,
                    pose=Pose2D(
                        float(pose_el.attrib["x"]),
                        float(pose_el.attrib["y"]),
                        float(pose_el.attrib["yaw"]),
                    ),
                    command=CommandTriple(
                        float(cmd_el.attrib["linear"]),
                        float(cmd_el.attrib["angular"]),
                        float(cmd_el.attrib["fork"]),
                    ),
                )
            )
    except (KeyError, ValueError) as e:
        raise ParseError(f"malformed session manifest: {e}") from None
    for i, rec in enumerate(manifest.records):
        if rec.index != i:
            raise ParseError(f"record indices not dense: position {i} holds index {rec.index}")
        if len(rec.distances) != IR_COUNT:
            raise ParseError(f"record {i}: expected {IR_COUNT} distances, got {len(rec.distances)}")
    return manifest


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Session:
    """Write handle for one recording session. Single writer, append-only."""

    def __init__(self, directory: Path, manifest: SessionManifest):
        self.directory = directory
        self.manifest = manifest

    @property
    def label(self) -> str:
        return self.manifest.timestamp_label

    def __len__(self) -> int:
        return len(self.manifest.records)

    def append_record(
        self,
        image: np.ndarray,
        distances,
        pose: Pose2D,
        command: CommandTriple,
    ) -> int:
        image = np.asarray(image)
        expected = (self.manifest.image_height, self.manifest.image_width, 3)
        if image.shape != expected:
            raise ShapeError(f"image shape {image.shape} does not match session {expected}")
        distances = tuple(float(d) for d in distances)
        if len(distances) != IR_COUNT:
            raise ShapeError(f"expected {IR_COUNT} distances, got {len(distances)}")
        index = len(self.manifest.records)
        image_file = f"img_{index}.ppm"
        netpbm.write_image(self.directory / image_file, image.astype(np.uint8))
        self.manifest.records.append(IORecord(index, image_file, distances, pose, command))
        _atomic_write(self.directory / MANIFEST_NAME, manifest_to_xml(self.manifest))
        return index

    def read_image(self, index: int) -> np.ndarray:
        rec = self.manifest.records[index]
        path = self.directory / rec.image_file
        if not path.exists():
            raise MissingAsset(index, str(path))
        return netpbm.read_image(path)


def validate_label(label: str) -> None:
    if not LABEL_RE.match(label):
        raise InvalidLabel(f"label {label!r} is not of the form YYYY-MM-DDTHH-MM-SS")


def open_session(root, label: str, width: int, height: int, rate_hz: float = 1.0) -> Session:
    """Create (or reopen while still empty) the session ``<root>/<label>/``."""
    validate_label(label)
    if width <= 0 or height <= 0 or rate_hz <= 0:
        raise ShapeError("width, height and rate must be positive")
    directory = Path(root) / label
    manifest = SessionManifest(label, int(width), int(height), float(rate_hz), [])
    if directory.exists():
        existing = sorted(p.name for p in directory.iterdir())
        if existing == [MANIFEST_NAME]:
            prior = manifest_from_xml((directory / MANIFEST_NAME).read_bytes())
            same_header = (
                (prior.timestamp_label, prior.image_width, prior.image_height) == (label, width, height)
                and abs(prior.rate_hz - rate_hz) <= 1e-9
            )
            if prior.records or not same_header:
                raise SessionConflict(f"{directory} already holds a different session")
            return Session(directory, manifest)
        if existing:
            raise SessionConflict(f"{directory} is not empty and has no matching manifest")
    else:
        directory.mkdir(parents=True)
    _atomic_write(directory / MANIFEST_NAME, manifest_to_xml(manifest))
    return Session(directory, manifest)


class LoadedSession:
    """Read-only view of a completed session; images are read on demand."""

    def __init__(self, directory: Path, manifest: SessionManifest):
        self.directory = directory
        self.manifest = manifest

    @property
    def label(self) -> str:
        return self.manifest.timestamp_label

    def __len__(self) -> int:
        return len(self.manifest.records)

    @property
    def records(self):
        return self.manifest.records

    def read_image(self, index: int) -> np.ndarray:
        rec = self.manifest.records[index]
        path = self.directory / rec.image_file
        if not path.exists():
            raise MissingAsset(index, str(path))
        return netpbm.read_image(path)

    def images(self):
        for i in range(len(self)):
            yield self.read_image(i)


def load_session(root, label: str) -> LoadedSession:
    directory = Path(root) / label
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise ParseError(f"no manifest at {manifest_path}")
    manifest = manifest_from_xml(manifest_path.read_bytes())
    for rec in manifest.records:
        if not (directory / rec.image_file).exists():
            raise MissingAsset(rec.index, str(directory / rec.image_file))
    return LoadedSession(directory, manifest)


def load_session_path(session_dir) -> LoadedSession:
    """Load a session given the full ``<root>/<label>`` directory path."""
    p = Path(session_dir)
    return load_session(p.parent, p.name)
