"""Binary netpbm I/O (PGM P5 grayscale, PPM P6 color), maxval 255 only.

Float image tensors use the [-1, 1] range: byte b maps to b/127.5 - 1 on
load and back with round-half-away-from-zero on save, so a load/save round
trip is byte-exact.  Label maps are stored as raw PGM bytes (pixel value =
class index, 255 reserved for "ignore").
"""

from __future__ import annotations

import numpy as np

from ..errors import FileFormatError

_MAGIC_CHANNELS = {b"P5": 1, b"P6": 3}
_CHANNEL_MAGIC = {1: b"P5", 3: b"P6"}


def _parse_header(data: bytes, path: str) -> tuple[int, int, int, int]:
    """Returns (channels, width, height, payload_offset)."""
    if len(data) < 2 or data[:2] not in _MAGIC_CHANNELS:
        raise FileFormatError("not a binary PGM/PPM (expected magic P5 or P6)",
                              path=path, offset=0)
    channels = _MAGIC_CHANNELS[data[:2]]
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if pos == start:
            raise FileFormatError("malformed header token", path=path, offset=pos)
        fields.append(int(data[start:pos]))
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FileFormatError("missing whitespace after maxval", path=path, offset=pos)
    pos += 1
    width, height, maxval = fields
    if maxval != 255:
        raise FileFormatError(f"unsupported maxval {maxval} (only 255)", path=path, offset=pos)
    if width < 1 or height < 1:
        raise FileFormatError(f"bad dimensions {width}x{height}", path=path, offset=pos)
    return channels, width, height, pos


def read_netpbm(path: str) -> np.ndarray:
    """Raw byte image as (channels, H, W) uint8."""
    with open(path, "rb") as f:
        data = f.read()
    channels, width, height, offset = _parse_header(data, path)
    expected = width * height * channels
    payload = data[offset:]
    if len(payload) < expected:
        raise FileFormatError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}",
            path=path, offset=offset + len(payload))
    arr = np.frombuffer(payload[:expected], dtype=np.uint8)
    return arr.reshape(height, width, channels).transpose(2, 0, 1).copy()


def write_netpbm(path: str, img: np.ndarray):
    """Write (channels, H, W) uint8 as P5 (1 channel) or P6 (3 channels)."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[0] not in _CHANNEL_MAGIC:
        raise FileFormatError(f"expected (1|3, H, W) uint8 array, got {img.shape}", path=path)
    magic = _CHANNEL_MAGIC[img.shape[0]]
    header = b"%s\n%d %d\n255\n" % (magic, img.shape[2], img.shape[1])
    with open(path, "wb") as f:
        f.write(header)
        f.write(img.transpose(1, 2, 0).astype(np.uint8).tobytes())


def load_image(path: str) -> np.ndarray:
    """Image as float32 (channels, H, W) in [-1, 1]."""
    return (read_netpbm(path).astype(np.float32) / 127.5) - 1.0


def save_image(path: str, img: np.ndarray):
    """Inverse of :func:`load_image`: clamp, rescale, round half away from zero."""
    img = np.asarray(img, dtype=np.float64)
    scaled = (np.clip(img, -1.0, 1.0) + 1.0) * 127.5
    rounded = np.floor(scaled + 0.5)  # values are >= 0 after the affine map
    write_netpbm(path, rounded.astype(np.uint8))


def load_label_map(path: str) -> np.ndarray:
    """Class-index map as (H, W) uint8 (255 = ignore)."""
    raw = read_netpbm(path)
    if raw.shape[0] != 1:
        raise FileFormatError("label maps must be single-channel PGM", path=path)
    return raw[0]


def save_label_map(path: str, labels: np.ndarray):
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise FileFormatError(f"label map must be 2-D, got {labels.shape}", path=path)
    write_netpbm(path, labels.astype(np.uint8)[None])
