"""Binary netpbm (P6) image IO.

The canonical form written here is ``P6\\n<w> <h>\\n255\\n`` followed by
w*h RGB byte triples in row-major order. Reading accepts any standard P6
whitespace/comment layout but requires maxval 255.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError, ShapeError


def encode_p6(raster: np.ndarray) -> bytes:
    """Serialize an (h, w, 3) uint8 raster to P6 bytes."""
    raster = np.asarray(raster)
    if raster.ndim != 3 or raster.shape[2] != 3:
        raise ShapeError(f"expected (h, w, 3) raster, got shape {raster.shape}")
    if raster.dtype != np.uint8:
        raise ShapeError(f"expected uint8 raster, got {raster.dtype}")
    h, w, _ = raster.shape
    return b"P6\n%d %d\n255\n" % (w, h) + raster.tobytes()


def decode_p6(data: bytes) -> np.ndarray:
    """Parse P6 bytes into an (h, w, 3) uint8 raster."""
    if not data.startswith(b"P6"):
        raise ParseError("not a P6 file (bad magic)")
    pos = 2
    fields = []
    while len(fields) < 3:
        # skip whitespace and '#' comment lines between header tokens
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated P6 header")
        try:
            fields.append(int(data[start:pos]))
        except ValueError:
            raise ParseError(f"bad P6 header token {data[start:pos]!r}") from None
    # exactly one whitespace byte separates the header from the payload
    pos += 1
    w, h, maxval = fields
    if w <= 0 or h <= 0:
        raise ParseError(f"bad P6 dimensions {w}x{h}")
    if maxval != 255:
        raise ParseError(f"unsupported P6 maxval {maxval}")
    payload = data[pos : pos + w * h * 3]
    if len(payload) != w * h * 3:
        raise ParseError(f"truncated P6 payload: want {w * h * 3} bytes, have {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).copy()


def write_image(path, raster: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(encode_p6(raster))


def read_image(path) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_p6(f.read())
