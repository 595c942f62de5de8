"""Parameter checkpoint files: magic "CBCK", named float32 matrices."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CBCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    """Write named 2-D float32 tensors; scalars/vectors are stored as 1xN."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(tensors)))
        for name, arr in tensors.items():
            mat = np.atleast_2d(np.asarray(arr, dtype="<f4"))
            if mat.ndim != 2:
                raise CheckpointError(f"tensor {name!r} is not 2-D")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<II", mat.shape[0], mat.shape[1]))
            fh.write(np.ascontiguousarray(mat).tobytes())


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    offset = 12
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        rows, cols = struct.unpack_from("<II", blob, offset)
        offset += 8
        nbytes = rows * cols * 4
        mat = np.frombuffer(blob, dtype="<f4", count=rows * cols, offset=offset)
        out[name] = mat.reshape(rows, cols).copy()
        offset += nbytes
    return out
