"""Learning-from-demonstration robot control.

Record sensor/command demonstrations into sessions, learn a PCA
eigenspace over the demo images, and drive a simulated robot by
projecting live camera frames into that space and replaying the command
of the nearest stored sample.
"""

from . import errors, learning, memory, netpbm, recognition, runtime, simulator

__all__ = [
    "errors",
    "learning",
    "memory",
    "netpbm",
    "recognition",
    "runtime",
    "simulator",
]
