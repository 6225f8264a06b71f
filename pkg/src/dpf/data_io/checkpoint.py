"""Bit-exact binary checkpoint format.

Layout (all integers little-endian):

    magic   4 bytes  b"DPF1"
    version u32      currently 1
    digest  u64      fingerprint of the resolved run config
    seed    u64      RNG seed the run was started with
    then, until EOF, one record per tensor:
    name_len u32, name utf-8, rank u32, dims u32 * rank, payload f32-LE

Loading refuses version or digest mismatches; truncation errors name the
tensor they hit.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import FileFormatError

MAGIC = b"DPF1"
VERSION = 1


def save_checkpoint(path: str, tensors: dict[str, np.ndarray],
                    config_digest: int, seed: int):
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQQ", VERSION, config_digest, seed))
        for name, arr in tensors.items():
            # np.ascontiguousarray would promote rank-0 to rank-1; asarray +
            # tobytes keeps the stored rank honest
            arr = np.asarray(arr, dtype="<f4")
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def load_checkpoint(path: str, expected_digest: int | None = None
                    ) -> tuple[dict[str, np.ndarray], int, int]:
    """Returns (tensors, config_digest, seed)."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise FileFormatError("bad magic (not a checkpoint)", path=path, offset=0)
    if len(blob) < 24:
        raise FileFormatError("truncated header", path=path, offset=len(blob))
    version, digest, seed = struct.unpack_from("<IQQ", blob, 4)
    if version != VERSION:
        raise FileFormatError(f"unsupported checkpoint version {version}", path=path, offset=4)
    if expected_digest is not None and digest != expected_digest:
        raise FileFormatError(
            f"config digest mismatch: checkpoint {digest:#018x}, expected {expected_digest:#018x}",
            path=path)
    tensors: dict[str, np.ndarray] = {}
    pos = 24
    while pos < len(blob):
        try:
            (name_len,) = struct.unpack_from("<I", blob, pos)
            name = blob[pos + 4: pos + 4 + name_len].decode("utf-8")
            if len(name.encode("utf-8")) != name_len:
                raise struct.error("short name")
            pos += 4 + name_len
            (rank,) = struct.unpack_from("<I", blob, pos)
            dims = struct.unpack_from(f"<{rank}I", blob, pos + 4)
            pos += 4 + 4 * rank
        except (struct.error, UnicodeDecodeError) as exc:
            raise FileFormatError(f"truncated tensor record ({exc})",
                                  path=path, offset=pos) from exc
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        nbytes = 4 * count
        if pos + nbytes > len(blob):
            raise FileFormatError(
                f"truncated payload for tensor {name!r}: need {nbytes} bytes, "
                f"have {len(blob) - pos}", path=path, offset=pos)
        arr = np.frombuffer(blob[pos:pos + nbytes], dtype="<f4").reshape(dims)
        tensors[name] = arr.astype(np.float32).copy()
        pos += nbytes
    return tensors, digest, seed
