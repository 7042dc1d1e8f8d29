import numpy as np
import pytest

from mlr import memory, simulator

SQUARE_WORLD_TEXT = """\
wall 0 0 4 0
wall 4 0 4 4
wall 4 4 0 4
wall 0 4 0 0
start 2 2 0
"""


@pytest.fixture
def square_world():
    """4 m square room with the robot at the center facing +x."""
    return simulator.parse_world(SQUARE_WORLD_TEXT)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_session(root, images, commands=None, label="2024-01-01T10-00-00", rate_hz=1.0):
    """Write a session of the given uint8 rasters (all same shape) to disk."""
    h, w, _ = images[0].shape
    session = memory.open_session(root, label, w, h, rate_hz)
    for i, img in enumerate(images):
        cmd = commands[i] if commands else memory.CommandTriple(0.5, 0.0, 0.0)
        session.append_record(
            img,
            distances=(1.0,) * memory.IR_COUNT,
            pose=memory.Pose2D(float(i), 0.0, 0.0),
            command=cmd,
        )
    return memory.load_session(root, label)


def random_rasters(rng, count, height=12, width=16):
    return [
        rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8).astype(np.uint8)
        for _ in range(count)
    ]
